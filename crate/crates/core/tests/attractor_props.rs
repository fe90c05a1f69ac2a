use fct_core::attractor::{atom_diameters, build_atoms, scaling_ratios, AtomTree};
use fct_core::cascade::run_cascade;
use fct_core::family::OneParamFamily;
use proptest::prelude::*;

fn tree(fam: &OneParamFamily, n_max: usize, generations: usize) -> AtomTree {
    let t = run_cascade(fam, n_max).unwrap().t_inf.unwrap();
    build_atoms(fam, t, generations, 64 << generations).unwrap()
}

fn check_geometry(fam: &OneParamFamily, tree: &AtomTree) {
    assert!(tree.is_nested());
    assert!(tree.is_cyclic(fam));
    for (m, g) in tree.generations.iter().enumerate() {
        assert_eq!(g.len(), 1 << m);
    }
    let d = atom_diameters(tree);
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    let r = scaling_ratios(&d).unwrap().ratios;
    // r[m] = d_{m+1}/d_m
    let diffs: Vec<f64> = r[4..].windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "ratios {r:?}");
}

#[test]
fn logistic_atoms() {
    let fam = OneParamFamily::logistic();
    check_geometry(&fam, &tree(&fam, 10, 8));
}

#[test]
fn henon_atoms() {
    let fam = OneParamFamily::henon(0.3);
    check_geometry(&fam, &tree(&fam, 7, 6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // generation-m atoms depend only on the orbit, so more points refine but never split them
    #[test]
    fn atom_count_is_two_to_the_generation(g in 0usize..6, extra in 0usize..4) {
        let fam = OneParamFamily::logistic();
        let t = 3.569945671870944;
        let tree = build_atoms(&fam, t, g, (64 << g) * (1 + extra)).unwrap();
        prop_assert_eq!(tree.generations.len(), g + 1);
        prop_assert!(tree.generations.iter().enumerate().all(|(m, a)| a.len() == 1 << m));
        prop_assert!(tree.is_nested());
    }
}
