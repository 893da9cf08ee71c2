//! Randomized checks of the structural laws. The unit suites pin each law
//! down on fixed examples; here proptest draws the instances.

use csbp::coalescent::{simulate_homogeneous, ReproductionMeasure};
use csbp::flow::SubordinatorPath;
use csbp::harness::seeded_rng;
use csbp::mechanism::{classify, psi_eval, v, BranchingMechanism, LevyFamily};
use csbp::partition::{apply_merge, coag, distance, restrict, ConsecutivePartition};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Mechanism strategies

fn feller() -> impl Strategy<Value = BranchingMechanism> {
    (0.2f64..2.5, -1.5f64..1.5)
        .prop_map(|(s2, b)| BranchingMechanism::new(s2, b, LevyFamily::None).unwrap())
}

/// Stable jumps over an optional diffusion part. `sigma2 > 0` disables the
/// closed-form cumulant, so half the draws exercise the integrator.
fn stable() -> impl Strategy<Value = BranchingMechanism> {
    let alpha = prop_oneof![0.3f64..0.9, 1.1f64..1.9];
    (prop_oneof![Just(0.0), 0.2f64..2.0], -1.0f64..1.0, alpha, 0.1f64..1.5).prop_map(
        |(s2, b, alpha, c)| {
            BranchingMechanism::new(s2, b, LevyFamily::Stable { alpha, c }).unwrap()
        },
    )
}

fn neveu() -> impl Strategy<Value = BranchingMechanism> {
    (prop_oneof![Just(0.0), 0.2f64..1.5], -1.0f64..1.0)
        .prop_map(|(s2, b)| BranchingMechanism::new(s2, b, LevyFamily::Neveu).unwrap())
}

fn finite_atomic() -> impl Strategy<Value = BranchingMechanism> {
    let atom = (0.05f64..3.0, 0.05f64..1.5);
    (
        prop_oneof![Just(0.0), 0.2f64..2.0],
        -1.0f64..1.0,
        proptest::collection::vec(atom, 1..=3),
    )
        .prop_map(|(s2, b, atoms)| {
            BranchingMechanism::new(s2, b, LevyFamily::FiniteAtomic { atoms }).unwrap()
        })
}

fn any_mech() -> impl Strategy<Value = BranchingMechanism> {
    prop_oneof![feller(), stable(), neveu(), finite_atomic()]
}

/// Families the cumulant solver has to integrate rather than evaluate.
fn ode_mech() -> impl Strategy<Value = BranchingMechanism> {
    let stable_diffusive = (
        0.2f64..2.0,
        -1.0f64..1.0,
        prop_oneof![0.3f64..0.9, 1.1f64..1.9],
        0.1f64..1.5,
    )
        .prop_map(|(s2, b, alpha, c)| {
            BranchingMechanism::new(s2, b, LevyFamily::Stable { alpha, c }).unwrap()
        });
    let neveu_diffusive = (0.2f64..1.5, -1.0f64..1.0)
        .prop_map(|(s2, b)| BranchingMechanism::new(s2, b, LevyFamily::Neveu).unwrap());
    prop_oneof![finite_atomic(), stable_diffusive, neveu_diffusive]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// `v(t + s, lam) = v(t, v(s, lam))` on random mechanisms and grids.
    #[test]
    fn semigroup_composes_on_random_grids(
        mech in any_mech(),
        t in 0.05f64..1.5,
        s in 0.05f64..1.5,
        lam in 0.02f64..20.0,
    ) {
        let through = v(&mech, s, lam).unwrap();
        let composed = v(&mech, t, through).unwrap();
        let direct = v(&mech, t + s, lam).unwrap();
        // Below this the absolute solver floor dominates the relative error.
        prop_assume!(direct > 1e-5);
        let rel = (composed - direct).abs() / direct;
        prop_assert!(
            rel <= 1e-8,
            "rel = {:.3e} at t = {t}, s = {s}, lam = {lam}, mech = {:?}",
            rel,
            mech
        );
    }

    /// The integrated cumulant solves `dv/dt = -Psi(v)`: a central difference
    /// in `t` matches an independent evaluation of `Psi` at `v`.
    #[test]
    fn cumulant_solves_the_flow_equation(
        mech in ode_mech(),
        t in 0.1f64..1.5,
        lam in 0.05f64..10.0,
    ) {
        let h = 1e-4;
        let up = v(&mech, t + h, lam).unwrap();
        let down = v(&mech, t - h, lam).unwrap();
        let mid = v(&mech, t, lam).unwrap();
        let fd = (up - down) / (2.0 * h);
        let rhs = -psi_eval(&mech, mid).unwrap();
        prop_assert!(
            (fd - rhs).abs() <= 1e-4 * (1.0 + rhs.abs()),
            "fd = {fd:.8e} vs -Psi(v) = {rhs:.8e} at t = {t}, lam = {lam}, mech = {:?}",
            mech
        );
    }

    /// `lam -> v(t, lam)` is strictly increasing.
    #[test]
    fn cumulant_is_strictly_increasing_in_lambda(
        mech in any_mech(),
        t in 0.05f64..1.0,
        lam in 0.02f64..5.0,
        factor in 1.5f64..3.0,
    ) {
        let lo = v(&mech, t, lam).unwrap();
        let hi = v(&mech, t, lam * factor).unwrap();
        prop_assert!(
            hi > lo,
            "v({t}, {lam}) = {lo:.8e} vs v({t}, {:.6}) = {hi:.8e}, mech = {:?}",
            lam * factor,
            mech
        );
    }

    /// `t -> v(t, lam)` decreases exactly when `Psi(lam) > 0` and increases
    /// exactly when `Psi(lam) < 0`; the sign never flips along the flow.
    #[test]
    fn time_direction_follows_the_sign_of_psi(
        mech in any_mech(),
        t1 in 0.05f64..0.8,
        dt in 0.3f64..1.0,
        lam in 0.05f64..5.0,
    ) {
        let sign = psi_eval(&mech, lam).unwrap();
        prop_assume!(sign.abs() > 1e-6);
        let a = v(&mech, t1, lam).unwrap();
        let b = v(&mech, t1 + dt, lam).unwrap();
        if sign > 0.0 {
            prop_assert!(b < a, "Psi({lam}) = {sign:.3e} > 0 but v rose: {a:.8e} -> {b:.8e}");
        } else {
            prop_assert!(b > a, "Psi({lam}) = {sign:.3e} < 0 but v fell: {a:.8e} -> {b:.8e}");
        }
    }
}

// ---------------------------------------------------------------------------
// Classification under scaling

/// A mechanism and its image under `Psi -> c Psi`, for the families closed
/// under positive scaling.
fn scaled_pair() -> impl Strategy<Value = (BranchingMechanism, BranchingMechanism, f64)> {
    let base = prop_oneof![feller(), stable(), finite_atomic()];
    (base, 0.1f64..10.0).prop_map(|(m, c)| {
        let levy = match &m.levy {
            LevyFamily::None => LevyFamily::None,
            LevyFamily::Stable { alpha, c: cst } => LevyFamily::Stable { alpha: *alpha, c: cst * c },
            LevyFamily::FiniteAtomic { atoms } => LevyFamily::FiniteAtomic {
                atoms: atoms.iter().map(|&(h, mass)| (h, mass * c)).collect(),
            },
            _ => unreachable!("base strategy only draws scalable families"),
        };
        let scaled = BranchingMechanism::new(m.sigma2 * c, m.beta * c, levy).unwrap();
        (m, scaled, c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    /// Scaling `Psi` by `c > 0` rescales time only: the criticality kind and
    /// the largest root `rho` are invariant.
    #[test]
    fn classification_is_scale_invariant((mech, scaled, c) in scaled_pair()) {
        let base = classify(&mech).unwrap();
        let other = classify(&scaled).unwrap();
        prop_assert_eq!(base.kind, other.kind, "c = {}, mech = {:?}", c, &mech);
        match (base.rho.is_finite(), other.rho.is_finite()) {
            (true, true) => {
                if base.rho == 0.0 || other.rho == 0.0 {
                    prop_assert_eq!(base.rho, other.rho, "c = {}, mech = {:?}", c, &mech);
                } else {
                    let rel = (base.rho - other.rho).abs() / base.rho.max(other.rho);
                    prop_assert!(
                        rel <= 1e-9,
                        "rho {} vs {} (rel {:.2e}), c = {}, mech = {:?}",
                        base.rho, other.rho, rel, c, &mech
                    );
                }
            }
            (false, false) => {}
            _ => prop_assert!(
                false,
                "rho {} vs {} under scaling by {}, mech = {:?}",
                base.rho, other.rho, c, &mech
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Partition strategies

/// Uniform random composition of `[ground]` via independent cut points.
fn composition(ground: u64) -> impl Strategy<Value = ConsecutivePartition> {
    proptest::collection::vec(any::<bool>(), ground.saturating_sub(1) as usize).prop_map(
        |cuts| {
            let mut sizes = Vec::new();
            let mut run = 1u64;
            for cut in cuts {
                if cut {
                    sizes.push(run);
                    run = 1;
                } else {
                    run += 1;
                }
            }
            sizes.push(run);
            ConsecutivePartition::from_sizes(sizes).unwrap()
        },
    )
}

/// Partition compatible with `ground` blocks upstream: a composition of
/// `[ground]` when finite, otherwise a free finite prefix plus the infinite
/// block, which absorbs any upstream count.
fn part_over(ground: u64, infinite: bool) -> BoxedStrategy<ConsecutivePartition> {
    if infinite {
        proptest::collection::vec(1u64..=4, 0..=6)
            .prop_map(|sizes| ConsecutivePartition::from_sizes_with_infinite(sizes).unwrap())
            .boxed()
    } else {
        composition(ground).boxed()
    }
}

type Chain3 = (ConsecutivePartition, ConsecutivePartition, ConsecutivePartition);

/// A coagulation-compatible chain `A, B, C`: each partition's ground covers
/// the previous one's block count. Infinite tails propagate down the chain
/// so every finite ground constraint stays satisfiable.
fn chain3() -> impl Strategy<Value = Chain3> {
    (2u64..=16, any::<bool>(), any::<bool>(), any::<bool>()).prop_flat_map(|(n, fa, fb, fc)| {
        let a_inf = fa;
        let b_inf = a_inf || fb;
        let c_inf = b_inf || fc;
        part_over(n, a_inf).prop_flat_map(move |a| {
            let ground_b = a.num_blocks() as u64;
            (Just(a), part_over(ground_b, b_inf)).prop_flat_map(move |(a, b)| {
                let ground_c = b.num_blocks() as u64;
                (Just(a), Just(b), part_over(ground_c, c_inf))
            })
        })
    })
}

fn coag_pair_with_cut() -> impl Strategy<Value = (ConsecutivePartition, ConsecutivePartition, u64)> {
    (2u64..=16, any::<bool>()).prop_flat_map(|(n, b_inf)| {
        composition(n).prop_flat_map(move |a| {
            let ground_b = a.num_blocks() as u64;
            (Just(a), part_over(ground_b, b_inf), 1..=n)
        })
    })
}

fn lipschitz_triple() -> impl Strategy<Value = Chain3> {
    let tailed = |max: usize| {
        proptest::collection::vec(1u64..=4, 0..=max)
            .prop_map(|sizes| ConsecutivePartition::from_sizes_with_infinite(sizes).unwrap())
    };
    (tailed(6), tailed(6), any::<bool>()).prop_flat_map(|(a, b, c_inf)| {
        let need = a.num_blocks().max(b.num_blocks()) as u64;
        (Just(a), Just(b), part_over(need, c_inf))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    /// `coag(coag(A, B), C) = coag(A, coag(B, C))` on random chains.
    #[test]
    fn coag_is_associative_on_random_chains((a, b, c) in chain3()) {
        let left = coag(&coag(&a, &b).unwrap(), &c).unwrap();
        let right = coag(&a, &coag(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right, "a = {:?}, b = {:?}, c = {:?}", &a, &b, &c);
    }

    /// `restrict(coag(A, B), k) = coag(restrict(A, k), B)`.
    #[test]
    fn restriction_commutes_with_coag_on_random_pairs((a, b, k) in coag_pair_with_cut()) {
        let lhs = restrict(&coag(&a, &b).unwrap(), k).unwrap();
        let rhs = coag(&restrict(&a, k).unwrap(), &b).unwrap();
        prop_assert_eq!(lhs, rhs, "a = {:?}, b = {:?}, k = {}", &a, &b, k);
    }

    /// `restrict(restrict(P, m), k) = restrict(P, k)` for `k <= m`.
    #[test]
    fn restriction_is_projective_on_random_partitions(
        sizes in proptest::collection::vec(1u64..=4, 0..=8),
        m in 1u64..=24,
        k in 1u64..=24,
    ) {
        let p = ConsecutivePartition::from_sizes_with_infinite(sizes).unwrap();
        let (k, m) = (k.min(m), k.max(m));
        let two_step = restrict(&restrict(&p, m).unwrap(), k).unwrap();
        let one_step = restrict(&p, k).unwrap();
        prop_assert_eq!(two_step, one_step, "p = {:?}, m = {}, k = {}", &p, m, k);
    }

    /// Coagulating both arguments by the same partition never increases the
    /// distance.
    #[test]
    fn right_coagulation_is_distance_contracting((a, b, c) in lipschitz_triple()) {
        let before = distance(&a, &b);
        let after = distance(&coag(&a, &c).unwrap(), &coag(&b, &c).unwrap());
        prop_assert!(
            after <= before,
            "distance grew {before} -> {after}, a = {:?}, b = {:?}, c = {:?}",
            &a, &b, &c
        );
    }
}

// ---------------------------------------------------------------------------
// Subordinator path inverses

fn path() -> impl Strategy<Value = SubordinatorPath> {
    (
        prop_oneof![Just(0.0), 0.1f64..2.0],
        1.0f64..4.0,
        proptest::collection::vec((0.01f64..0.99, 0.05f64..2.0), 0..=8),
    )
        .prop_map(|(drift, horizon, raw)| {
            let mut jumps: Vec<(f64, f64)> =
                raw.into_iter().map(|(u, s)| (u * horizon, s)).collect();
            jumps.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            // Coincident draws collapse into one jump carrying the total mass.
            jumps.dedup_by(|next, kept| {
                if next.0 - kept.0 < 1e-9 {
                    kept.1 += next.1;
                    true
                } else {
                    false
                }
            });
            SubordinatorPath::new(drift, jumps, horizon).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    /// The right inverse on a random path: stays in `[0, horizon]`, is
    /// monotone in `y`, overshoots its argument (`X(T_y) >= y`), and
    /// `X(x) > y` exactly when `T_y < x` away from the crossing point.
    #[test]
    fn right_inverse_clauses_hold_on_random_paths(
        p in path(),
        ys in proptest::collection::vec(0.0f64..0.999, 1..=10),
        xs in proptest::collection::vec(0.0f64..1.0, 1..=10),
    ) {
        let top = p.eval(p.horizon()).unwrap();
        prop_assume!(top > 1e-9);
        let mut levels: Vec<f64> = ys.iter().map(|u| u * top).collect();
        levels.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut prev_inv = 0.0f64;
        for &y in &levels {
            let inv = p.right_inverse(y).unwrap();
            prop_assert!((0.0..=p.horizon()).contains(&inv), "inv = {inv}, y = {y}");
            prop_assert!(inv >= prev_inv, "inverse not monotone: {prev_inv} then {inv}");
            prev_inv = inv;
            let at = p.eval(inv).unwrap();
            prop_assert!(at >= y - 1e-12 * top, "X(T_y) = {at} < y = {y}");
            for &u in &xs {
                let x = u * p.horizon();
                if (x - inv).abs() < 1e-9 {
                    continue;
                }
                let crossed = p.eval(x).unwrap() > y;
                prop_assert_eq!(
                    crossed,
                    inv < x,
                    "iff clause failed at x = {}, y = {}, inv = {}",
                    x, y, inv
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Coalescent event streams

fn measure_for(cap: u64) -> BoxedStrategy<ReproductionMeasure> {
    prop_oneof![
        Just(ReproductionMeasure::neveu(cap).unwrap()),
        (1.1f64..1.9).prop_map(move |alpha| ReproductionMeasure::stable_limit(alpha, cap).unwrap()),
        (
            proptest::collection::vec(0.01f64..1.5, (cap - 1) as usize),
            0.0f64..0.5,
        )
            .prop_map(|(mass, beyond)| ReproductionMeasure::new(mass, beyond).unwrap()),
    ]
    .boxed()
}

fn homogeneous_run() -> impl Strategy<Value = (ReproductionMeasure, usize, f64, u64)> {
    (2u64..=12).prop_flat_map(|cap| {
        (
            measure_for(cap),
            2..=(cap as usize + 1),
            0.2f64..2.0,
            any::<u64>(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    /// Merge times are strictly increasing, stay inside the horizon, and
    /// replaying the event list from singletons reproduces the final state.
    #[test]
    fn merges_are_ordered_and_replay_to_the_final_state(
        (mu, n, t_end, seed) in homogeneous_run()
    ) {
        let mut rng = seeded_rng(seed);
        let traj = simulate_homogeneous(&mu, n, t_end, &mut rng).unwrap();
        let mut prev = traj.t_start();
        let mut state = ConsecutivePartition::singletons(n).unwrap();
        for ev in traj.events() {
            prop_assert!(ev.t > prev, "event at {} does not advance past {}", ev.t, prev);
            prop_assert!(ev.t < traj.horizon(), "event at {} beyond horizon {}", ev.t, traj.horizon());
            prev = ev.t;
            let blocks = state.num_blocks();
            state = apply_merge(&state, ev.event).unwrap();
            prop_assert!(state.num_blocks() < blocks, "merge did not reduce the block count");
        }
        prop_assert_eq!(&state, traj.final_state());
    }
}
