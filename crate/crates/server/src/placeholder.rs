//! Tiny SVG stand-ins so synthetic datasets can be served without a generator.

use std::fs;
use std::path::{Path, PathBuf};

use concept_lens::store::ImageManifest;
use concept_lens::Result;

fn tile(label: &str, hue: usize) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"64\" height=\"64\">\
         <rect width=\"64\" height=\"64\" fill=\"hsl({hue},45%,55%)\"/>\
         <text x=\"32\" y=\"36\" font-size=\"11\" text-anchor=\"middle\" fill=\"#fff\">{label}</text></svg>\n"
    )
}

/// Writes `base/n.svg` and `edit/n_m.svg` under `dir` and returns the manifest.
pub fn write_placeholders(dir: &Path, num_codes: usize, num_directions: usize) -> Result<ImageManifest> {
    fs::create_dir_all(dir.join("base"))?;
    fs::create_dir_all(dir.join("edit"))?;
    let mut manifest = ImageManifest::default();
    for n in 0..num_codes {
        let rel = PathBuf::from(format!("base/{n}.svg"));
        fs::write(dir.join(&rel), tile(&format!("w{n}"), (n * 47) % 360))?;
        manifest.base.insert(n, rel);
        for m in 0..num_directions {
            let rel = PathBuf::from(format!("edit/{n}_{m}.svg"));
            fs::write(dir.join(&rel), tile(&format!("{n}+d{m}"), (n * 47 + m * 89) % 360))?;
            manifest.edited.insert((n, m), rel);
        }
    }
    Ok(manifest)
}
