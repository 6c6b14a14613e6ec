use invfilter_core::bclf::{bclf_controller, Tier};
use invfilter_core::cbf::{cbf_constraint, cbf_filter, CbfConstraint};
use invfilter_core::equivalence::reduce_cbf_to_bclf;
use invfilter_core::sim::builtins::{double_integrator_drift, unicycle_linearized};
use invfilter_core::solver::oracle_min_norm;
use invfilter_core::{AxisBox, BarrierSpec, ControlAffineSystem, ControlBox, MinNormProblem, ScalarField};
use nalgebra::{dvector, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk_barrier(k: f64) -> BarrierSpec {
    BarrierSpec::new(
        ScalarField::new(2, |p| 1.0 - p.norm_squared(), |p| p * -2.0),
        k,
        AxisBox::symmetric(2, 1.5).unwrap(),
    )
    .unwrap()
}

struct Instance {
    system: ControlAffineSystem,
    barrier: BarrierSpec,
    cbox: ControlBox,
    x: DVector<f64>,
    nominal: DVector<f64>,
}

/// States inside the unit disk, where the disk barrier is feasible for a
/// unit control box whenever the wind is small.
fn instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let wind = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let r: f64 = rng.gen_range(0.0..0.99);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Instance {
                system: unicycle_linearized(wind),
                barrier: disk_barrier(rng.gen_range(0.2..2.0)),
                cbox: AxisBox::symmetric(2, 1.0).unwrap(),
                x: dvector![r * th.cos(), r * th.sin()],
                nominal: dvector![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            }
        })
        .collect()
}

fn constraints(i: &Instance) -> Vec<CbfConstraint> {
    vec![cbf_constraint(&i.barrier, &i.system, &i.x).unwrap()]
}

#[test]
fn filter_is_idempotent() {
    for i in instances(100, 1) {
        let cs = constraints(&i);
        let once = cbf_filter(&i.nominal, &cs, &i.cbox).unwrap();
        let twice = cbf_filter(&once, &cs, &i.cbox).unwrap();
        assert!((&once - &twice).amax() <= 1e-12, "{once} vs {twice}");
    }
}

#[test]
fn filter_output_is_admissible() {
    for i in instances(100, 2) {
        let cs = constraints(&i);
        let u = cbf_filter(&i.nominal, &cs, &i.cbox).unwrap();
        assert!(i.cbox.contains(&u, 1e-9));
        assert!(cs[0].residual_at(&u) >= -1e-9);
    }
}

#[test]
fn filter_is_no_farther_than_best_grid_point() {
    for i in instances(100, 3) {
        let cs = constraints(&i);
        let u = cbf_filter(&i.nominal, &cs, &i.cbox).unwrap();
        let p = MinNormProblem::new(i.nominal.clone(), vec![cs[0].halfspace.clone()], i.cbox.clone()).unwrap();
        let g = oracle_min_norm(&p, 201).expect("feasible grid point");
        let du = (&u - &i.nominal).norm();
        let dg = (&g - &i.nominal).norm();
        assert!(du <= dg + 1e-9, "filter {du} vs grid {dg}");
        // The grid optimum is within one cell diagonal of the exact one.
        assert!(dg - du <= 0.01 * 2f64.sqrt() + 1e-9);
    }
}

#[test]
fn admissible_nominal_passes_through() {
    for i in instances(100, 4) {
        let cs = constraints(&i);
        let u = cbf_filter(&i.nominal, &cs, &i.cbox).unwrap();
        if i.cbox.contains(&i.nominal, 0.0) && cs[0].residual_at(&i.nominal) >= 0.0 {
            assert_eq!(u, i.nominal);
        }
    }
}

#[test]
fn barrier_filter_matches_reduced_priority_controller() {
    for i in instances(100, 5) {
        let cs = constraints(&i);
        let u = cbf_filter(&i.nominal, &cs, &i.cbox).unwrap();
        let reduced = reduce_cbf_to_bclf(&i.barrier);
        let step = bclf_controller(&reduced, &i.system, &i.x, &i.nominal, &i.cbox).unwrap();
        assert_eq!(step.tier, Tier::SatInc);
        assert!((&u - &step.control).amax() <= 1e-9, "{u} vs {}", step.control);
    }
}

#[test]
fn drift_integrator_filter_matches_reduction() {
    let sys = double_integrator_drift();
    let b = BarrierSpec::new(
        ScalarField::affine(dvector![1.0, 1.0], 0.0),
        1.0,
        AxisBox::symmetric(2, 2.0).unwrap(),
    )
    .unwrap();
    let cbox = AxisBox::symmetric(1, 3.0).unwrap();
    let reduced = reduce_cbf_to_bclf(&b);
    for x in AxisBox::from_slices(&[0.0, -1.0], &[2.0, 2.0]).unwrap().grid(11) {
        if b.h.value(&x) < 0.0 {
            continue;
        }
        for nominal in [dvector![-3.0], dvector![0.0], dvector![2.5]] {
            let u = cbf_filter(&nominal, &[cbf_constraint(&b, &sys, &x).unwrap()], &cbox).unwrap();
            let step = bclf_controller(&reduced, &sys, &x, &nominal, &cbox).unwrap();
            assert!((&u - &step.control).amax() <= 1e-9);
        }
    }
}
