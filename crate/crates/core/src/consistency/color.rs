//! Bivariate color scale over (edit magnitude, edit variability).
//!
//! Four corner colors are interpolated bilinearly in CIELAB. Chroma is then
//! pulled toward neutral in the interior so mid-range values recede and the
//! extremes stand out.

use serde::{Deserialize, Serialize};

use crate::consistency::domain::ColorDomain;
use crate::consistency::stats::ConsistencyStats;
use crate::scalar::Scalar;

/// sRGB channels in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiColor {
    pub red: f64,
    pub green: f64,
    pub blue: f64,
}

impl BiColor {
    pub fn hex(&self) -> String {
        let q = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
        format!("#{:02x}{:02x}{:02x}", q(self.red), q(self.green), q(self.blue))
    }
}

/// Low magnitude, low variability.
pub const RED: [f64; 3] = [0.78, 0.12, 0.14];
/// High magnitude, low variability.
pub const BLUE: [f64; 3] = [0.10, 0.30, 0.78];
/// High magnitude, high variability.
pub const PURPLE: [f64; 3] = [0.52, 0.16, 0.62];
/// Low magnitude, high variability: dark and nearly neutral.
pub const GRAY: [f64; 3] = [0.36, 0.36, 0.41];

/// Interior chroma reduction; 1 − CENTER_FADE of the chroma survives at the center.
pub const CENTER_FADE: f64 = 0.9;

const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

fn to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn from_linear(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(to_linear);
    let xyz = [
        0.4124564 * r + 0.3575761 * g + 0.1804375 * b,
        0.2126729 * r + 0.7151522 * g + 0.0721750 * b,
        0.0193339 * r + 0.1191920 * g + 0.9503041 * b,
    ];
    let f = |t: f64| {
        let d: f64 = 6.0 / 29.0;
        if t > d.powi(3) {
            t.cbrt()
        } else {
            t / (3.0 * d * d) + 4.0 / 29.0
        }
    };
    let [fx, fy, fz] = [f(xyz[0] / WHITE[0]), f(xyz[1] / WHITE[1]), f(xyz[2] / WHITE[2])];
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn lab_to_srgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let finv = |t: f64| {
        let d: f64 = 6.0 / 29.0;
        if t > d {
            t.powi(3)
        } else {
            3.0 * d * d * (t - 4.0 / 29.0)
        }
    };
    let [x, y, z] = [finv(fx) * WHITE[0], finv(fy) * WHITE[1], finv(fz) * WHITE[2]];
    let r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    let g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    let b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
    [r, g, b].map(|c| from_linear(c.clamp(0.0, 1.0)).clamp(0.0, 1.0))
}

/// Color for a point of the unit square: `u` is normalized magnitude,
/// `v` normalized variability.
pub fn color_at(u: f64, v: f64) -> BiColor {
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    // exact corners skip the Lab round trip so they match the constants bit for bit
    let corner = match (u, v) {
        (0.0, 0.0) => Some(RED),
        (1.0, 0.0) => Some(BLUE),
        (1.0, 1.0) => Some(PURPLE),
        (0.0, 1.0) => Some(GRAY),
        _ => None,
    };
    if let Some([red, green, blue]) = corner {
        return BiColor { red, green, blue };
    }
    let corners = [(RED, (1.0 - u) * (1.0 - v)), (BLUE, u * (1.0 - v)), (PURPLE, u * v), (GRAY, (1.0 - u) * v)];
    let mut lab = [0.0; 3];
    for (rgb, w) in corners {
        let c = srgb_to_lab(rgb);
        for i in 0..3 {
            lab[i] += w * c[i];
        }
    }
    let fade = 1.0 - CENTER_FADE * (1.0 - (2.0 * u - 1.0).abs()) * (1.0 - (2.0 * v - 1.0).abs());
    lab[1] *= fade;
    lab[2] *= fade;
    let [red, green, blue] = lab_to_srgb(lab);
    BiColor { red, green, blue }
}

pub fn map_color<T: Scalar>(stats: &ConsistencyStats<T>, domain: &ColorDomain<T>) -> BiColor {
    let (u, v) = domain.normalize(stats);
    color_at(u, v)
}

/// Corner colors keyed by (magnitude, variability) corner, for legends.
pub fn corner_colors() -> [(&'static str, BiColor); 4] {
    [
        ("low_mean_low_std", color_at(0.0, 0.0)),
        ("high_mean_low_std", color_at(1.0, 0.0)),
        ("high_mean_high_std", color_at(1.0, 1.0)),
        ("low_mean_high_std", color_at(0.0, 1.0)),
    ]
}
