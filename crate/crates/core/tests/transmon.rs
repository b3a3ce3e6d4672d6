use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use scanqubit::transmon::{
    asymptotic_frequency, asymptotic_n01, ej_of_flux, invert_ej, qubit_frequency, solve,
    SquidSpec, TransmonSpec,
};

// Dense-diagonalization oracle: ascending energies and |<0|n|1>|.
fn dense(ec: f64, ej: f64, cutoff: usize) -> (Vec<f64>, f64) {
    let dim = 2 * cutoff + 1;
    let n = |i: usize| i as f64 - cutoff as f64;
    let h = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            4.0 * ec * n(i) * n(i)
        } else if i.abs_diff(j) == 1 {
            -0.5 * ej
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let (v0, v1) = (eig.eigenvectors.column(order[0]), eig.eigenvectors.column(order[1]));
    let n01: f64 = (0..dim).map(|i| n(i) * v0[i] * v1[i]).sum();
    (energies, n01.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_dense_oracle(ec in 0.1..0.5f64, ratio in 1.0..150.0f64) {
        let spec = TransmonSpec::new(ec, ratio * ec);
        let sol = solve(&spec).unwrap();
        let (energies, n01) = dense(ec, ratio * ec, spec.cutoff);
        for (a, b) in sol.energies.iter().zip(&energies).take(6) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
        prop_assert!((sol.n01 - n01).abs() < 1e-9);
    }

    #[test]
    fn energies_ascending(ec in 0.1..0.5f64, ratio in 0.5..150.0f64) {
        let sol = solve(&TransmonSpec::new(ec, ratio * ec)).unwrap();
        // high charge-like pairs are split by ~E_J^(2k) and can round together
        prop_assert!(sol.energies.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(sol.energies[0] < sol.energies[1] && sol.energies[1] < sol.energies[2]);
        prop_assert!(sol.n01 > 0.0);
    }

    #[test]
    fn cutoff_converged(ec in 0.1..0.5f64, ratio in 1.0..100.0f64) {
        let a = qubit_frequency(&TransmonSpec::with_cutoff(ec, ratio * ec, 15)).unwrap();
        let b = qubit_frequency(&TransmonSpec::with_cutoff(ec, ratio * ec, 30)).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn frequency_increases_with_ej(ec in 0.1..0.5f64, r1 in 1.0..150.0f64, r2 in 1.0..150.0f64) {
        prop_assume!((r1 - r2).abs() > 1e-6);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let f = |r: f64| qubit_frequency(&TransmonSpec::new(ec, r * ec)).unwrap();
        prop_assert!(f(lo) < f(hi));
    }

    #[test]
    fn transmon_regime_asymptotics(ec in 0.1..0.5f64, ratio in 30.0..100.0f64) {
        let ej = ratio * ec;
        let sol = solve(&TransmonSpec::new(ec, ej)).unwrap();
        let nu = asymptotic_frequency(ec, ej);
        prop_assert!((sol.nu_q - nu).abs() / nu < 0.02);
        let n01 = asymptotic_n01(ec, ej);
        prop_assert!((sol.n01 - n01).abs() / n01 < 0.05);
    }

    #[test]
    fn anharmonicity_near_minus_ec(ec in 0.1..0.5f64, ratio in 50.0..150.0f64) {
        // the first correction to -E_C is still ~24% at E_J/E_C = 30
        let sol = solve(&TransmonSpec::new(ec, ratio * ec)).unwrap();
        prop_assert!(sol.anharmonicity() < 0.0);
        prop_assert!((sol.anharmonicity() + ec).abs() < 0.15 * ec);
    }

    #[test]
    fn invert_round_trip(ec in 0.15..0.5f64, target in 3.0..14.0f64) {
        let ej = invert_ej(ec, target).unwrap();
        let nu = qubit_frequency(&TransmonSpec::new(ec, ej)).unwrap();
        prop_assert!((nu - target).abs() < 1e-9);
    }

    #[test]
    fn squid_bounded_and_periodic(ej_max in 1.0..100.0f64, flux in -3.0..3.0f64) {
        let e = ej_of_flux(&SquidSpec { ej_max, flux });
        prop_assert!((0.0..=ej_max).contains(&e));
        let shifted = ej_of_flux(&SquidSpec { ej_max, flux: flux + 1.0 });
        prop_assert!((e - shifted).abs() < 1e-9 * ej_max);
        let mirrored = ej_of_flux(&SquidSpec { ej_max, flux: -flux });
        prop_assert!((e - mirrored).abs() < 1e-12 * ej_max);
    }
}

#[test]
fn ratio_59_at_388_mhz() {
    let (ec, ej) = (0.388, 59.0 * 0.388);
    let sol = solve(&TransmonSpec::new(ec, ej)).unwrap();
    let (energies, n01) = dense(ec, ej, 40);
    let oracle_nu = energies[1] - energies[0];
    assert!((sol.nu_q - oracle_nu).abs() < 1e-9);
    assert!((sol.n01 - n01).abs() < 1e-9);
    assert!((sol.nu_q - asymptotic_frequency(ec, ej)).abs() / sol.nu_q < 0.02);
}

#[test]
fn eight_ghz_at_388_mhz() {
    let ej = invert_ej(0.388, 8.0).unwrap();
    assert!((ej - 22.7).abs() < 0.1, "E_J = {ej}");
    assert!((ej / 0.388 - 59.0).abs() < 1.0);
}

#[test]
fn maximum_frequency_regime() {
    let ej_max = invert_ej(0.388, 12.1).unwrap();
    let sol = solve(&TransmonSpec::new(0.388, ej_max)).unwrap();
    assert!((sol.nu_q - 12.1).abs() < 1e-9);
    let (energies, _) = dense(0.388, ej_max, 40);
    assert!((energies[1] - energies[0] - 12.1).abs() < 1e-9);
    // half flux brings it all the way down
    let low = ej_of_flux(&SquidSpec { ej_max, flux: 0.5 });
    assert!(qubit_frequency(&TransmonSpec::new(0.388, low)).unwrap() < 1.6);
}

#[test]
fn extended_cutoff_above_ratio_100() {
    assert_eq!(TransmonSpec::new(0.2, 19.0).cutoff, 20);
    assert_eq!(TransmonSpec::new(0.2, 21.0).cutoff, 40);
}
