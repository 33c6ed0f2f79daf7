//! Engine-level acceptance checks. Each returns a one-line summary on
//! success or the first violation found.

use std::time::Instant;

use concept_lens::cluster::*;
use concept_lens::consistency::*;
use concept_lens::extraction::{extract_budget, extract_round, ExtractionConfig};
use concept_lens::layout::{grid_layout, icicle_layout, Orientation};
use concept_lens::matrix::Matrix;
use concept_lens::store::*;
use concept_lens::synthetic::{generate_planted, generate_synthetic, rand_index, SyntheticConfig};
use concept_lens::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles;

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn eq1_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(11);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let (n, m, k) = (r.random_range(1..=8), r.random_range(2..=6), r.random_range(2..=8));
        let store = oracles::random_store(&mut r, n, m, k);
        let subset = if trial % 2 == 1 { Some(oracles::random_subset(&mut r, n)) } else { None };
        let got = concept_distance_matrix(&store, subset.as_deref()).map_err(|e| e.to_string())?;
        let want = oracles::concept_distances(&store, subset.as_deref());
        for a in 0..m {
            for b in 0..m {
                let e = (got.get(a, b) - want[a][b]).abs();
                worst = worst.max(e);
                ensure!(e <= 1e-9, "trial {trial}: entry ({a},{b}) off by {e:e}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 1.0, "took {secs:.3}s");
    Ok(format!("20 stores, max error {worst:.1e}, {secs:.3}s"))
}

/// Steered and unsteered code distances against hand summation.
pub fn code_distance_oracle() -> Outcome {
    let mut r = rng(12);
    for trial in 0..20 {
        let (n, m, k) = (r.random_range(2..=8), r.random_range(1..=6), r.random_range(2..=8));
        let store = oracles::random_store(&mut r, n, m, k);
        let subset = if trial % 2 == 1 { Some(oracles::random_subset(&mut r, m)) } else { None };
        let got = code_distance_matrix(&store, subset.as_deref()).map_err(|e| e.to_string())?;
        let want = oracles::code_distances(&store, subset.as_deref());
        for a in 0..n {
            for b in 0..n {
                let e = (got.get(a, b) - want[a][b]).abs();
                ensure!(e <= 1e-9, "trial {trial}: entry ({a},{b}) off by {e:e}");
            }
        }
    }
    Ok("20 stores".into())
}

pub fn consistency_oracle() -> Outcome {
    let mut r = rng(13);
    let mut worst = 0.0f64;
    let store = oracles::random_store(&mut r, 8, 7, 6);
    let grid = EditGrid::new(&store);
    let concepts = build_hierarchy(&store, HierarchyKind::Concept, None).map_err(|e| e.to_string())?;
    let codes = build_hierarchy(&store, HierarchyKind::Code, None).map_err(|e| e.to_string())?;
    let mut check = |got: ConsistencyStats<f64>, want: (f64, f64), what: &str| -> Result<(), String> {
        let e = (got.mean - want.0).abs().max((got.std - want.1).abs());
        worst = worst.max(e);
        ensure!(e <= 1e-9, "{what}: off by {e:e}");
        Ok(())
    };
    for draw in 0..100 {
        let (n, m) = (store.num_codes(), store.num_directions());
        match draw % 4 {
            0 => {
                let sel = oracles::random_subset(&mut r, m);
                let w = r.random_range(0..n);
                let vals: Vec<f64> = sel.iter().map(|&j| oracles::edit_distance(&store, w, j)).collect();
                check(concept_consistency(&store, &sel, w).unwrap(), oracles::mean_std(&vals), "concept set")?;
            }
            1 => {
                let sel = oracles::random_subset(&mut r, n);
                let d = r.random_range(0..m);
                let vals: Vec<f64> = sel.iter().map(|&i| oracles::edit_distance(&store, i, d)).collect();
                check(code_consistency(&store, &sel, d).unwrap(), oracles::mean_std(&vals), "code set")?;
            }
            2 => {
                let node = &concepts.nodes()[r.random_range(0..concepts.nodes().len())];
                let sel = oracles::random_subset(&mut r, n);
                let per: Vec<(f64, f64)> = sel
                    .iter()
                    .map(|&w| {
                        let v: Vec<f64> = node.leaves.iter().map(|&j| oracles::edit_distance(&store, w, j)).collect();
                        oracles::mean_std(&v)
                    })
                    .collect();
                let want = (
                    per.iter().map(|p| p.0).sum::<f64>() / per.len() as f64,
                    per.iter().map(|p| p.1).sum::<f64>() / per.len() as f64,
                );
                check(grid.node_consistency(HierarchyKind::Concept, node, Some(&sel)).unwrap(), want, "concept node")?;
                check(node_consistency(&store, HierarchyKind::Concept, node, Some(&sel)).unwrap(), want, "concept node (direct)")?;
            }
            _ => {
                let node = &codes.nodes()[r.random_range(0..codes.nodes().len())];
                let sel = oracles::random_subset(&mut r, m);
                let per: Vec<(f64, f64)> = sel
                    .iter()
                    .map(|&d| {
                        let v: Vec<f64> = node.leaves.iter().map(|&i| oracles::edit_distance(&store, i, d)).collect();
                        oracles::mean_std(&v)
                    })
                    .collect();
                let want = (
                    per.iter().map(|p| p.0).sum::<f64>() / per.len() as f64,
                    per.iter().map(|p| p.1).sum::<f64>() / per.len() as f64,
                );
                check(grid.node_consistency(HierarchyKind::Code, node, Some(&sel)).unwrap(), want, "code node")?;
            }
        }
    }
    Ok(format!("100 draws, max error {worst:.1e}"))
}

pub fn linkage_oracle() -> Outcome {
    let mut r = rng(14);
    let mut tied = 0;
    for trial in 0..50 {
        let n = r.random_range(1..=12);
        let ties = trial % 2 == 0;
        let d = oracles::random_distances(&mut r, n, ties);
        tied += usize::from(ties);
        let want = oracles::naive_complete_linkage(&d);
        let got = linkage(&oracles::to_matrix(&d));
        ensure!(got.len() == want.len(), "trial {trial}: {} merges, expected {}", got.len(), want.len());
        for (s, (g, w)) in got.iter().zip(&want).enumerate() {
            ensure!((g.a, g.b, g.height) == *w, "trial {trial} step {s}: got {g:?}, expected {w:?}");
        }
        let h = agglomerate(&oracles::to_matrix(&d), HierarchyKind::Concept).map_err(|e| e.to_string())?;
        for v in h.nodes() {
            if let Some(p) = v.parent {
                ensure!(h.nodes()[p].height >= v.height, "trial {trial}: height decreases at node {}", v.id);
            }
        }
    }
    Ok(format!("50 matrices ({tied} with ties), merges and heights identical, monotone"))
}

pub fn leaf_order_oracle() -> Outcome {
    let mut r = rng(15);
    let mut mismatches = 0;
    for trial in 0..30 {
        let n = r.random_range(1..=8);
        let h = oracles::random_hierarchy(&mut r, n, HierarchyKind::Concept);
        let d = oracles::random_distances(&mut r, n, trial % 3 == 0);
        let order = optimal_leaf_order(&h, &oracles::to_matrix(&d));
        let all = oracles::flip_orders(&h, h.root());
        ensure!(all.len() == 1 << (n - 1), "trial {trial}: {} flip orders", all.len());
        ensure!(all.contains(&order), "trial {trial}: order {order:?} is not flip-reachable");
        let best = all.iter().map(|o| oracles::path_cost(o, &d)).fold(f64::INFINITY, f64::min);
        if (oracles::path_cost(&order, &d) - best).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    ensure!(mismatches == 0, "{mismatches} mismatches");
    Ok("30 trees, 0 mismatches".into())
}

pub fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let mut cfg = SyntheticConfig::new(24, 16, 16, 8, 2024);
    cfg.noise = 0.0;
    ensure!(cfg.concept_groups == 4 && cfg.code_groups == 3, "defaults changed");
    let (store, truth) = generate_planted::<f64>(&cfg).map_err(|e| e.to_string())?;
    let h = build_hierarchy(&store, HierarchyKind::Concept, None).map_err(|e| e.to_string())?;
    let groups = rand_index(&h.cut_at_depth(2), &truth.concept_groups);
    ensure!(groups == 1.0, "depth-2 cut Rand index {groups}");
    let steer = truth.codes_in_group(truth.steer_group);
    let hs = build_hierarchy(&store, HierarchyKind::Concept, Some(&steer)).map_err(|e| e.to_string())?;
    let subgroups = rand_index(&hs.cut_at_depth(3), &truth.concept_subgroups);
    ensure!(subgroups == 1.0, "steered depth-3 cut Rand index {subgroups}");
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2}s");
    Ok(format!("depth-2 cut Rand {groups}, steered depth-3 cut Rand {subgroups}, {secs:.2}s"))
}

pub fn extraction_oracle() -> Outcome {
    let mut r = rng(16);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let cols = r.random_range(2..=16);
        let rows = r.random_range(2..=32);
        let data: Vec<f64> = (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect();
        let a = Matrix::from_row_major(rows, cols, data).unwrap();
        let rank = rows.min(cols);
        let exclude_first = trial % 2 == 0;
        let top_k = rank - usize::from(exclude_first);
        let got = extract_round(&a, top_k, exclude_first).map_err(|e| format!("trial {trial}: {e}"))?;
        let (values, vectors) = oracles::svd_oracle(&a);
        ensure!(got.len() == top_k, "trial {trial}: {} directions", got.len());
        for dir in &got {
            let i = dir.rank - 1;
            let gap = oracles::sign_free_gap(&dir.vector, &vectors[i]);
            worst = worst.max(gap);
            ensure!(gap <= 1e-8, "trial {trial} rank {}: vector off by {gap:e}", dir.rank);
            ensure!((dir.singular_value - values[i]).abs() <= 1e-8 * values[0], "trial {trial}: singular value {}", dir.rank);
        }
    }

    let layers = (0..3)
        .map(|l| WeightLayer {
            name: format!("layer{l}"),
            matrix: Matrix::from_row_major(48, 32, (0..48 * 32).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap(),
        })
        .collect();
    let bundle = WeightBundle::<f64>::new(layers).unwrap();
    let cfg = ExtractionConfig::new(4, 99);
    ensure!(cfg.top_k == 20 && cfg.exclude_first && cfg.budget == 400, "default config {cfg:?}");
    let set = extract_budget(&bundle, &cfg).map_err(|e| e.to_string())?;
    ensure!(set.len() == 400, "{} directions", set.len());
    ensure!(set.rounds() == 20, "{} rounds", set.rounds());
    for row in set.directions.iter_rows() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        ensure!((norm - 1.0).abs() <= 1e-6, "direction norm {norm}");
    }
    let store = generate_synthetic::<f32>(4, 4, 4, 4, 1).map_err(|e| e.to_string())?;
    let echoed = decode_store::<f32>(&encode_store(&store).unwrap()).unwrap();
    ensure!(echoed.alpha() == 5.0 && echoed.header().alpha == 5.0, "alpha {}", echoed.alpha());
    Ok(format!("20 SVD oracles (max gap {worst:.1e}); 400 unit directions over 20 rounds with top_k=20; alpha=5 in header"))
}

fn rel_ok(got: f64, want: f64, scale: f64) -> bool {
    (got - want).abs() <= 1e-9 * want.abs().max(scale)
}

pub fn scale_equivariance() -> Outcome {
    let store = generate_synthetic::<f64>(12, 10, 8, 4, 5).map_err(|e| e.to_string())?;
    let concepts = build_hierarchy(&store, HierarchyKind::Concept, None).unwrap();
    let codes = build_hierarchy(&store, HierarchyKind::Code, None).unwrap();
    let grid = EditGrid::new(&store);
    let sel_codes = [0usize, 3, 4, 9];
    let sel_concepts = [1usize, 2, 7];
    let base_c = grid.hierarchy_consistency(&concepts, Some(&sel_codes)).unwrap();
    let base_r = grid.hierarchy_consistency(&codes, Some(&sel_concepts)).unwrap();
    let dom = ColorDomain::from_grid(&grid).unwrap();
    let mut checked = 0;
    for s in [0.5, 2.0, 10.0] {
        let scaled = store.map_features(|x| x * s).unwrap();
        let g = EditGrid::new(&scaled);
        let typical = s * dom.mean_center;
        for (i, (a, b)) in g.values().iter().zip(grid.values()).enumerate() {
            ensure!(rel_ok(*a, s * b, 0.0), "s={s}: edit distance {i}: {a} vs {}", s * b);
            checked += 1;
        }
        let sc = g.hierarchy_consistency(&concepts, Some(&sel_codes)).unwrap();
        let sr = g.hierarchy_consistency(&codes, Some(&sel_concepts)).unwrap();
        for (got, want) in sc.iter().zip(&base_c).chain(sr.iter().zip(&base_r)) {
            ensure!(rel_ok(got.mean, s * want.mean, 0.0), "s={s}: mean {} vs {}", got.mean, s * want.mean);
            // a std that is zero in exact arithmetic carries rounding noise, so it is judged against the data scale
            ensure!(rel_ok(got.std, s * want.std, 1e-6 * typical), "s={s}: std {} vs {}", got.std, s * want.std);
            checked += 2;
        }
        for (w, d) in [(0usize, 3usize), (5, 1)] {
            let a = concept_consistency(&scaled, &[d, 0, 2], w).unwrap();
            let b = concept_consistency(&store, &[d, 0, 2], w).unwrap();
            ensure!(rel_ok(a.mean, s * b.mean, 0.0) && rel_ok(a.std, s * b.std, 1e-6 * typical), "s={s}: concept set");
            let a = code_consistency(&scaled, &[w, 7, 11], d).unwrap();
            let b = code_consistency(&store, &[w, 7, 11], d).unwrap();
            ensure!(rel_ok(a.mean, s * b.mean, 0.0) && rel_ok(a.std, s * b.std, 1e-6 * typical), "s={s}: code set");
            checked += 8;
        }
        let sd = ColorDomain::from_grid(&g).unwrap();
        ensure!(rel_ok(sd.mean_center, s * dom.mean_center, 0.0), "s={s}: domain mean center");
        ensure!(rel_ok(sd.std_center, s * dom.std_center, 0.0), "s={s}: domain std center");
    }
    Ok(format!("s in {{0.5, 2, 10}}: {checked} quantities scale by s"))
}

pub fn layout_invariants() -> Outcome {
    let mut r = rng(17);
    let mut gaps_checked = 0;
    for trial in 0..20 {
        let n = r.random_range(1..=40);
        let h = oracles::random_hierarchy(&mut r, n, HierarchyKind::Concept);
        let other_n = r.random_range(1..=12);
        let other = oracles::random_hierarchy(&mut r, other_n, HierarchyKind::Code);
        let gap_max = r.random_range(0.0..=0.2);
        let depth = r.random_range(1..=6);
        let l = icicle_layout(&h, depth, gap_max, Orientation::Horizontal).map_err(|e| e.to_string())?;
        let o = icicle_layout(&other, depth, gap_max, Orientation::Vertical).map_err(|e| e.to_string())?;
        let order = h.leaf_order();
        for (p, w) in order.windows(2).enumerate() {
            let want = gap_max / (1.0 + oracles::lca_depth(&h, w[0], w[1]) as f64);
            ensure!(l.gaps[p] == want, "trial {trial}: gap {p} is {} expected {want}", l.gaps[p]);
            let (_, end) = l.leaf_intervals[w[0]];
            let (start, _) = l.leaf_intervals[w[1]];
            ensure!((start - end - want).abs() <= 1e-9, "trial {trial}: leaves {} and {} not adjacent", w[0], w[1]);
            gaps_checked += 1;
        }
        let leaves: f64 = l.leaf_intervals.iter().map(|(a, b)| b - a).sum();
        let total = leaves + l.gaps.iter().sum::<f64>();
        let first = l.leaf_intervals[order[0]].0;
        let last = l.leaf_intervals[order[n - 1]].1;
        ensure!((total - l.extent).abs() <= 1e-9 && first == 0.0 && (last - l.extent).abs() <= 1e-9, "trial {trial}: extent");
        ensure!((leaves - n as f64).abs() <= 1e-9, "trial {trial}: leaf extents not proportional to counts");

        // every cut depth gives a valid grid whose cells follow the icicles
        let cd = r.random_range(0..=h.max_depth());
        let rd = r.random_range(0..=other.max_depth());
        let (csel, rsel) = (h.cut_nodes(cd), other.cut_nodes(rd));
        let g = grid_layout(&h, &l, &other, &o, &csel, &rsel).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure!(g.cells.len() == csel.len() * rsel.len(), "trial {trial}: cell count");
        for c in &g.cells {
            let (x0, x1) = l.node_intervals[c.concept_node];
            let (y0, y1) = o.node_intervals[c.code_node];
            ensure!(c.rect.x == x0 && c.rect.width == x1 - x0 && c.rect.y == y0 && c.rect.height == y1 - y0, "trial {trial}: cell drifts");
            let area = h.nodes()[c.concept_node].cardinality() * other.nodes()[c.code_node].cardinality();
            ensure!(c.image_slots.len() == area, "trial {trial}: slot count");
        }
        // mixing cut depths is refused
        if let Some(&deep) = h.cut_nodes(h.max_depth()).iter().find(|&&id| h.nodes()[id].depth == h.max_depth()) {
            if h.max_depth() > 0 {
                let mixed = [h.root(), deep];
                let res = grid_layout(&h, &l, &other, &o, &mixed, &rsel);
                ensure!(matches!(res, Err(Error::Selection(_))), "trial {trial}: mixed-depth selection accepted");
            }
        }
    }
    Ok(format!("20 hierarchies, {gaps_checked} gaps exact vs brute-force LCA, extents conserved, mixed depths refused"))
}

pub fn format_round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name);

    let store = generate_synthetic::<f32>(6, 5, 4, 3, 8).map_err(|e| e.to_string())?;
    write_store(&store, path("a.clns")).unwrap();
    let back: FeatureStore<f32> = load_store(path("a.clns")).unwrap();
    ensure!(back == store, "store differs after round trip");
    let bytes = std::fs::read(path("a.clns")).unwrap();
    ensure!(encode_store(&back).unwrap() == bytes, "store re-encoding differs");
    ensure!(back.base_features().iter().zip(store.base_features()).all(|(a, b)| a.to_bits() == b.to_bits()), "store bits");

    let mut r = rng(18);
    let layers = (0..3)
        .map(|l| WeightLayer {
            name: format!("style.{l}"),
            matrix: Matrix::from_row_major(3 + l, 5, (0..(3 + l) * 5).map(|_| r.random_range(-2.0f32..2.0)).collect()).unwrap(),
        })
        .collect();
    let bundle = WeightBundle::<f32>::new(layers).unwrap();
    write_weight_bundle(&bundle, path("w.clwb")).unwrap();
    ensure!(load_weight_bundle::<f32>(path("w.clwb")).unwrap() == bundle, "weight bundle differs");

    let dirs = store.directions().unwrap().clone();
    write_directions(&dirs, path("d.cldr")).unwrap();
    ensure!(load_directions::<f32>(path("d.cldr")).unwrap() == dirs, "directions differ");

    let s64 = store.cast::<f64>();
    let h = build_hierarchy(&s64, HierarchyKind::Concept, Some(&[1, 4])).unwrap();
    h.write(path("h.json")).unwrap();
    let hb = Hierarchy::<f64>::load(path("h.json")).unwrap();
    ensure!(hb == h, "hierarchy differs after round trip");
    ensure!(hb.nodes().iter().zip(h.nodes()).all(|(a, b)| a.height.to_bits() == b.height.to_bits()), "height bits");

    let mut rejected = 0;
    let expect = |res: Result<(), Error>, want: fn(&Error) -> bool, what: &str| -> Result<(), String> {
        match res {
            Err(e) if want(&e) => Ok(()),
            other => Err(format!("{what}: {other:?}")),
        }
    };
    let is_format = |e: &Error| matches!(e, Error::Format(_));
    let is_corrupt = |e: &Error| matches!(e, Error::Corrupt(_));
    let is_data = |e: &Error| matches!(e, Error::Data(_));
    let store_res = |b: &[u8]| decode_store::<f32>(b).map(|_| ());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    expect(store_res(&bad), is_format, "store magic")?;
    let mut bad = bytes.clone();
    bad[4] = 9;
    expect(store_res(&bad), is_format, "store version")?;
    let mut bad = bytes.clone();
    bad[8] = bad[8].wrapping_add(1);
    expect(store_res(&bad), is_corrupt, "store dimensions")?;
    expect(store_res(&bytes[..bytes.len() - 3]), is_corrupt, "store truncation")?;
    let mut bad = bytes.clone();
    let payload = bad.len() - 4 * (5 * 3 + 6 * 3 + 6 * 5 * 4);
    bad[payload..payload + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    expect(store_res(&bad), is_data, "store NaN")?;
    rejected += 5;

    let wb = std::fs::read(path("w.clwb")).unwrap();
    let mut bad = wb.clone();
    bad[1] = b'?';
    expect(decode_weight_bundle::<f32>(&bad).map(|_| ()), is_format, "bundle magic")?;
    expect(decode_weight_bundle::<f32>(&wb[..wb.len() - 1]).map(|_| ()), is_corrupt, "bundle truncation")?;
    let db = std::fs::read(path("d.cldr")).unwrap();
    let mut bad = db.clone();
    bad[2] = b'?';
    expect(decode_directions::<f32>(&bad).map(|_| ()), is_format, "directions magic")?;
    let mut bad = db.clone();
    bad[4] = 7;
    expect(decode_directions::<f32>(&bad).map(|_| ()), is_format, "directions version")?;
    rejected += 4;

    let text = std::fs::read_to_string(path("h.json")).unwrap();
    ensure!(Hierarchy::<f64>::from_json(&text.replacen("\"concept\"", "\"tree\"", 1)).is_err(), "hierarchy kind accepted");
    ensure!(Hierarchy::<f64>::from_json(&text[..text.len() / 2]).is_err(), "truncated hierarchy accepted");
    rejected += 2;
    Ok(format!("store, bundle, directions, hierarchy bit-faithful; {rejected} corruptions rejected with typed errors"))
}

pub fn all() -> Vec<(&'static str, fn() -> Outcome)> {
    vec![
        ("aggregated concept distance matches brute force", eq1_oracle as fn() -> Outcome),
        ("consistency statistics match direct arithmetic", consistency_oracle),
        ("complete linkage matches naive re-scan", linkage_oracle),
        ("optimal leaf ordering matches exhaustive flips", leaf_order_oracle),
        ("planted structure recovered", planted_recovery),
        ("extraction matches SVD oracle and fills budget", extraction_oracle),
        ("scale equivariance", scale_equivariance),
        ("layout invariants", layout_invariants),
        ("format round trips and typed rejection", format_round_trips),
    ]
}
