//! BIF parsing and ancestral sampling checked against exact marginals from
//! joint enumeration.

mod common;

use care_core::bayesnet::{ancestral_sample, binarize_target, parse_bif};
use care_core::dataset::ColumnKind;
use common::{chi_square_gof_pvalue, random_small_net};

const DRAWS: usize = 40_000;

#[test]
fn written_networks_parse_back() {
    for seed in 0..8 {
        let small = random_small_net(5, 2, seed);
        let net = parse_bif(&small.to_bif()).unwrap();
        assert_eq!(net.len(), 5);
        for (v, node) in net.nodes().iter().enumerate() {
            assert_eq!(node.levels.len(), small.cards[v]);
            assert_eq!(node.parents, small.parents[v]);
            for (row, want) in node.cpt.iter().zip(&small.tables[v]) {
                for (p, w) in row.iter().zip(want) {
                    assert!((p - *w as f64 / 1000.0).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn sampler_marginals_match_exact_inference() {
    for (seed, n) in [(1u64, 3usize), (2, 4), (3, 5), (4, 6), (5, 6)] {
        let small = random_small_net(n, 3, seed);
        let net = parse_bif(&small.to_bif()).unwrap();
        let data = ancestral_sample(&net, DRAWS, 100 + seed).unwrap();
        let exact = small.marginals();
        for v in 0..n {
            let mut counts = vec![0usize; small.cards[v]];
            for row in data.rows() {
                counts[row[v] as usize] += 1;
            }
            let p = chi_square_gof_pvalue(&counts, &exact[v]);
            assert!(p > 0.01, "net {seed} node {v}: chi-square p = {p}, counts {counts:?}, exact {:?}", exact[v]);
        }
    }
}

#[test]
fn sampler_joint_matches_exact_inference() {
    let small = random_small_net(4, 3, 42);
    let net = parse_bif(&small.to_bif()).unwrap();
    let data = ancestral_sample(&net, DRAWS, 7).unwrap();
    let joint = small.joint();
    let mut counts = vec![0usize; joint.len()];
    for row in data.rows() {
        let idx = joint.iter().position(|(a, _)| a.iter().zip(row).all(|(&l, &v)| l as f64 == v)).unwrap();
        counts[idx] += 1;
    }
    let probs: Vec<f64> = joint.iter().map(|(_, p)| *p).collect();
    let p = chi_square_gof_pvalue(&counts, &probs);
    assert!(p > 0.01, "joint chi-square p = {p}");
}

#[test]
fn sampled_columns_are_categorical_and_reproducible() {
    let net = parse_bif(&random_small_net(3, 2, 9).to_bif()).unwrap();
    let a = ancestral_sample(&net, 50, 3).unwrap();
    assert!(a.kinds().iter().all(|k| matches!(k, ColumnKind::Categorical { .. })));
    assert_eq!(a, ancestral_sample(&net, 50, 3).unwrap());
    let b = binarize_target(&a, "N2", &["n2_l1"]).unwrap();
    assert_eq!(b.n_features(), 2);
    let want: Vec<u8> = a.rows().iter().map(|r| (r[2] == 1.0) as u8).collect();
    assert_eq!(b.target_values().unwrap(), want.as_slice());
}

/// Counts `variable` blocks and their declared level counts by scanning
/// the text, without the parser.
fn scan_variable_blocks(text: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find("variable ") {
        rest = &rest[pos + "variable ".len()..];
        let name: String = rest.chars().take_while(|c| !c.is_whitespace() && *c != '{').collect();
        let open = rest.find('[').unwrap();
        let close = rest.find(']').unwrap();
        let count: usize = rest[open + 1..close].trim().parse().unwrap();
        out.push((name, count));
    }
    out
}

/// Runs when `CARE_ALARM_BIF` points at a local copy of the ALARM network.
#[test]
fn alarm_file_parses_when_available() {
    let Some(path) = std::env::var_os("CARE_ALARM_BIF") else {
        eprintln!("CARE_ALARM_BIF not set; skipping");
        return;
    };
    let Ok(text) = std::fs::read_to_string(&path) else {
        eprintln!("{path:?} not readable; skipping");
        return;
    };
    let net = parse_bif(&text).unwrap();
    let blocks = scan_variable_blocks(&text);
    assert_eq!(net.len(), blocks.len());
    for (node, (name, count)) in net.nodes().iter().zip(&blocks) {
        assert_eq!(&node.name, name);
        assert_eq!(node.levels.len(), *count);
    }
}
