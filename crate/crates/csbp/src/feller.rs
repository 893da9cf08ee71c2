//! Pairwise genealogy of the Feller diffusion as a coalescent point process.
//!
//! For the quadratic mechanism `Psi(q) = (sigma^2/2) q^2 - beta q` the time
//! `T_{x,y}` back to the most recent common ancestor of the individuals `x`
//! and `y` of the current generation has the closed distribution function
//! `P(T_{x,y} <= t) = exp(-bhat_t (y - x))` with
//! `bhat_t = 2 beta / (sigma^2 (e^{beta t} - 1))`. The whole family over all
//! windows is carried by a single Poisson point process on
//! `[0, x_max] x (0, inf]` with intensity `dx (x) mu(dt)`, normalized so that
//! `mu([t, inf]) = bhat_t`: the ancestor time of a window is the depth of the
//! deepest atom it covers, so `T_{x,z} = max(T_{x,y}, T_{y,z})` exactly and
//! every merger is binary.
//!
//! Subcritical populations (`beta < 0`) give `mu` an atom of mass
//! `2|beta|/sigma^2` at infinite depth. Atoms of infinite depth cut the axis
//! into maximal families: two individuals separated by one share no ancestor
//! at any distance into the past, which happens to a given pair with
//! probability `1 - e^{2 beta (y-x)/sigma^2}`. For `beta >= 0` every pair
//! coalesces eventually.

use rand::Rng;

use crate::error::{Error, Result};
use crate::flow;

/// Cutoff below which [`sample_cpp`] does not resolve atom depths. Suitable
/// for queries down to comparable times; experiments probing only larger
/// times should raise the cutoff, since the atom count per unit length is
/// `bhat_{t_min}`, which grows like `2/(sigma^2 t_min)`.
pub const DEFAULT_T_MIN: f64 = 1e-4;

/// Parameters of the quadratic mechanism: diffusion coefficient `sigma2`
/// (strictly positive) and growth rate `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FellerParams {
    pub sigma2: f64,
    pub beta: f64,
}

impl FellerParams {
    pub fn new(sigma2: f64, beta: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::domain(format!(
                "sigma2 must be positive and finite, got {sigma2}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::domain(format!("beta must be finite, got {beta}")));
        }
        Ok(FellerParams { sigma2, beta })
    }

    /// Mass of `mu` at infinite depth: `2|beta|/sigma^2` when `beta < 0`,
    /// zero otherwise.
    fn depth_tail_floor(&self) -> f64 {
        if self.beta < 0.0 {
            -2.0 * self.beta / self.sigma2
        } else {
            0.0
        }
    }
}

/// Ancestor rate `bhat_t = 2 beta / (sigma^2 (e^{beta t} - 1))`, the tail
/// mass `mu([t, inf])` of the depth measure. Continuous in `beta`, with
/// `bhat_t = 2/(sigma^2 t)` at `beta = 0`. Requires `t > 0` finite.
pub fn beta_hat(p: &FellerParams, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "beta_hat needs a positive finite time, got {t}"
        )));
    }
    Ok(flow::feller_bhat(p.sigma2, p.beta, t))
}

/// `P(T_{x,y} <= t) = exp(-bhat_t (y - x))` for the window `[x, y]`.
///
/// `t = 0` gives 0 for `x < y`; `x = y` gives 1 for every `t >= 0`. An
/// infinite `t` reports the continuous limit, the probability that the window
/// has a common ancestor at all: `e^{2 beta (y-x)/sigma^2}` when `beta < 0`,
/// else 1.
pub fn mrca_cdf(p: &FellerParams, t: f64, x: f64, y: f64) -> Result<f64> {
    let len = window_length(x, y)?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("mrca_cdf needs t >= 0, got {t}")));
    }
    if len == 0.0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let rate = if t.is_finite() {
        beta_hat(p, t)?
    } else {
        p.depth_tail_floor()
    };
    Ok((-rate * len).exp())
}

/// Probability that the window `[x, y]` never finds a common ancestor:
/// `1 - e^{2 beta (y-x)/sigma^2}` when `beta < 0`, zero otherwise.
pub fn no_common_ancestor_prob(p: &FellerParams, x: f64, y: f64) -> Result<f64> {
    let len = window_length(x, y)?;
    Ok(-(-p.depth_tail_floor() * len).exp_m1())
}

fn window_length(x: f64, y: f64) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() || x > y {
        return Err(Error::domain(format!(
            "window needs finite x <= y, got [{x}, {y}]"
        )));
    }
    Ok(y - x)
}

/// Depth whose tail rate equals `r`: the inverse of `t -> bhat_t`, with
/// rates at or below the infinite-depth mass mapping to infinity.
fn invert_depth(p: &FellerParams, r: f64) -> f64 {
    if p.beta == 0.0 {
        2.0 / (p.sigma2 * r)
    } else {
        let arg = 1.0 + 2.0 * p.beta / (p.sigma2 * r);
        if arg <= 0.0 {
            f64::INFINITY
        } else {
            arg.ln() / p.beta
        }
    }
}

/// One draw of `T_{x,y}` for a window of the given length, by inverting the
/// tail rate at an `Exp(length)` level. Returns `f64::INFINITY` for pairs
/// with no common ancestor, which carries the exact mass
/// [`no_common_ancestor_prob`] when `beta < 0`.
pub fn sample_pair_mrca(p: &FellerParams, length: f64, rng: &mut impl Rng) -> Result<f64> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::domain(format!(
            "pair sampling needs a positive finite window length, got {length}"
        )));
    }
    // Exp(1) via inversion; u in [0, 1) so 1 - u never hits zero, and a
    // zero level would alias the measure-zero event T = inf.
    let mut e = 0.0;
    while e == 0.0 {
        e = -(-rng.random::<f64>()).ln_1p();
    }
    Ok(invert_depth(p, e / length))
}

/// The depth comb over `[0, x_max]`: atoms `(x, t)` with strictly increasing
/// positions, truncated to depths `t >= t_min`. Depths are `f64::INFINITY`
/// for atoms at infinite depth, which occur only when `beta < 0`.
#[derive(Debug, Clone)]
pub struct CoalescentPointProcess {
    x_max: f64,
    t_min: f64,
    atoms: Vec<(f64, f64)>,
}

impl CoalescentPointProcess {
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Depth cutoff the sample was generated with. Ancestor queries are
    /// exact in law at thresholds at or above it.
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Positions of the atoms at infinite depth, the boundaries between
    /// maximal families. Empty unless `beta < 0`.
    pub fn infinite_atoms(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .filter(|a| a.1.is_infinite())
            .map(|a| a.0)
            .collect()
    }

    /// Ancestor time of the window `[x, y]`: the deepest atom the closed
    /// window covers, zero when it covers none. `x = y` is its own ancestor
    /// at time zero. Values below `t_min` are truncated to zero, so
    /// comparisons against thresholds `t >= t_min` are unbiased while the
    /// value itself is only exact when it is at least `t_min`.
    pub fn mrca(&self, x: f64, y: f64) -> Result<f64> {
        if window_length(x, y)? == 0.0 {
            return Ok(0.0);
        }
        if x < 0.0 || y > self.x_max {
            return Err(Error::range(format!(
                "window [{x}, {y}] leaves the sampled range [0, {}]",
                self.x_max
            )));
        }
        let lo = self.atoms.partition_point(|a| a.0 < x);
        let hi = self.atoms.partition_point(|a| a.0 <= y);
        let mut deepest = 0.0f64;
        for &(_, d) in &self.atoms[lo..hi] {
            deepest = deepest.max(d);
        }
        Ok(deepest)
    }

    /// Rows `x,depth` with header, infinite depths rendered as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,depth\n");
        for &(x, d) in &self.atoms {
            out.push_str(&format!("{x},{d}\n"));
        }
        out
    }
}

/// One sample of the comb over `[0, x_max]`, keeping atoms deeper than
/// `t_min`. Their count is Poisson with mean `x_max bhat_{t_min}`, positions
/// are uniform, and each depth inverts the tail rate at an independent
/// uniform level below `bhat_{t_min}`.
pub fn sample_cpp(
    p: &FellerParams,
    x_max: f64,
    t_min: f64,
    rng: &mut impl Rng,
) -> Result<CoalescentPointProcess> {
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::domain(format!(
            "x_max must be positive and finite, got {x_max}"
        )));
    }
    let rate0 = beta_hat(p, t_min)?;
    let n = flow::sample_poisson(rng, x_max * rate0)?;
    let positions = flow::sorted_uniform_locations(rng, n, x_max);
    let mut atoms = Vec::with_capacity(positions.len());
    for x in positions {
        let mut u = rng.random::<f64>();
        while u == 0.0 {
            u = rng.random::<f64>();
        }
        atoms.push((x, invert_depth(p, u * rate0)));
    }
    Ok(CoalescentPointProcess { x_max, t_min, atoms })
}

/// Positions of the infinite-depth atoms alone, a Poisson process of
/// intensity `2|beta|/sigma^2` on `[0, x_max]`. Defined only for `beta < 0`.
pub fn prolific_points(p: &FellerParams, x_max: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if p.beta >= 0.0 {
        return Err(Error::domain(format!(
            "infinite-depth atoms need beta < 0, got beta = {}",
            p.beta
        )));
    }
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::domain(format!(
            "x_max must be positive and finite, got {x_max}"
        )));
    }
    let n = flow::sample_poisson(rng, x_max * p.depth_tail_floor())?;
    Ok(flow::sorted_uniform_locations(rng, n, x_max))
}

/// Draws the consecutive-pair ancestor times of at least three strictly
/// increasing positions and reports whether the finite ones are pairwise
/// distinct, as they almost surely are: consecutive windows read disjoint
/// strips of the comb, so a tie would mean two atoms at exactly equal depth.
/// Infinite times (pairs that never coalesce) cannot tie and are ignored.
/// Duplicate positions are rejected rather than reported as a failure.
pub fn binary_merging_check(
    p: &FellerParams,
    positions: &[f64],
    rng: &mut impl Rng,
) -> Result<bool> {
    if positions.len() < 3 {
        return Err(Error::domain(format!(
            "binary merging needs at least 3 positions, got {}",
            positions.len()
        )));
    }
    for w in positions.windows(2) {
        if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(Error::domain(format!(
                "positions must be finite and strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut finite = Vec::with_capacity(positions.len() - 1);
    for w in positions.windows(2) {
        let t = sample_pair_mrca(p, w[1] - w[0], rng)?;
        if t.is_finite() {
            finite.push(t);
        }
    }
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(finite.windows(2).all(|w| w[0] < w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{
        binomial_z_report, derived_rng, ks_test_two_sample, mean_se, seeded_rng,
    };

    fn params(sigma2: f64, beta: f64) -> FellerParams {
        FellerParams::new(sigma2, beta).unwrap()
    }

    #[test]
    fn params_reject_bad_arguments() {
        assert!(FellerParams::new(0.0, 1.0).is_err());
        assert!(FellerParams::new(-1.0, 0.0).is_err());
        assert!(FellerParams::new(f64::NAN, 0.0).is_err());
        assert!(FellerParams::new(1.0, f64::INFINITY).is_err());
        assert!(FellerParams::new(2.0, -1.0).is_ok());
    }

    #[test]
    fn beta_hat_closed_values() {
        // sigma2 = 2, beta = 0: bhat_t = 1/t.
        let p = params(2.0, 0.0);
        assert!((beta_hat(&p, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta_hat(&p, 0.25).unwrap() - 4.0).abs() < 1e-15);
        // beta = ln 2, sigma2 = 2, t = 1: bhat = 2 ln 2 / (2 (2 - 1)) = ln 2.
        let q = params(2.0, 2.0f64.ln());
        assert!((beta_hat(&q, 1.0).unwrap() - 2.0f64.ln()).abs() < 1e-14);
        // beta < 0, large t: bhat_t -> 2|beta|/sigma^2.
        let r = params(2.0, -1.0);
        assert!((beta_hat(&r, 50.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(beta_hat(&p, 0.0).is_err());
        assert!(beta_hat(&p, f64::INFINITY).is_err());
    }

    #[test]
    fn beta_hat_continuous_in_beta() {
        for t in [0.1, 0.7, 1.0, 3.0] {
            let base = beta_hat(&params(2.0, 0.0), t).unwrap();
            for beta in [1e-8, -1e-8] {
                let v = beta_hat(&params(2.0, beta), t).unwrap();
                assert!(
                    ((v - base) / base).abs() < 1e-6,
                    "bhat jump at beta = {beta}, t = {t}: {v} vs {base}"
                );
            }
        }
    }

    #[test]
    fn mrca_cdf_closed_values() {
        let p = params(2.0, 0.0);
        // Unit window at t = 1: e^{-1}.
        let c = mrca_cdf(&p, 1.0, 0.0, 1.0).unwrap();
        assert!((c - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(mrca_cdf(&p, 0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(mrca_cdf(&p, 0.0, 0.3, 0.3).unwrap(), 1.0);
        assert_eq!(mrca_cdf(&p, f64::INFINITY, 0.0, 5.0).unwrap(), 1.0);
        assert!(mrca_cdf(&p, -1.0, 0.0, 1.0).is_err());
        assert!(mrca_cdf(&p, 1.0, 1.0, 0.0).is_err());

        // beta < 0: the limit in t is the common-ancestor probability.
        let q = params(2.0, -1.0);
        let lim = mrca_cdf(&q, f64::INFINITY, 0.0, 1.0).unwrap();
        assert!((lim - (-1.0f64).exp()).abs() < 1e-15);
        let at_40 = mrca_cdf(&q, 40.0, 0.0, 1.0).unwrap();
        assert!((at_40 - lim).abs() < 1e-12);
        let none = no_common_ancestor_prob(&q, 0.0, 1.0).unwrap();
        assert!((none + lim - 1.0).abs() < 1e-15);
        assert_eq!(no_common_ancestor_prob(&p, 0.0, 9.0).unwrap(), 0.0);
        assert_eq!(no_common_ancestor_prob(&q, 2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn mrca_cdf_continuous_in_beta() {
        let base = mrca_cdf(&params(2.0, 0.0), 1.0, 0.0, 0.8).unwrap();
        for beta in [1e-8, -1e-8] {
            let v = mrca_cdf(&params(2.0, beta), 1.0, 0.0, 0.8).unwrap();
            assert!(((v - base) / base).abs() < 1e-6);
        }
    }

    #[test]
    fn invert_depth_inverts_tail_rate() {
        for p in [params(2.0, 0.0), params(1.5, 0.8), params(2.0, -1.0)] {
            for t in [0.05, 0.4, 1.0, 3.0] {
                let r = beta_hat(&p, t).unwrap();
                assert!((invert_depth(&p, r) - t).abs() < 1e-12 * t.max(1.0));
            }
        }
        // Rates at or below the infinite-depth mass invert to infinity.
        let q = params(2.0, -1.0);
        assert!(invert_depth(&q, 1.0).is_infinite());
        assert!(invert_depth(&q, 0.5).is_infinite());
        assert!(invert_depth(&q, 1.0 + 1e-9).is_finite());
    }

    #[test]
    fn pair_mrca_matches_cdf_and_ancestor_mass() {
        let q = params(2.0, -1.0);
        let mut rng = seeded_rng(0x0f_e1);
        let len = 0.7;
        let reps = 20_000u64;
        let mut infinite = 0u64;
        let mut below_half = 0u64;
        for _ in 0..reps {
            let t = sample_pair_mrca(&q, len, &mut rng).unwrap();
            if t.is_infinite() {
                infinite += 1;
            } else if t <= 0.5 {
                below_half += 1;
            }
        }
        let none = no_common_ancestor_prob(&q, 0.0, len).unwrap();
        let r = binomial_z_report("pair-mrca-infinite", "mass", infinite, reps, none, 3.5);
        assert!(r.pass, "infinite mass z = {}", r.value);
        let at_half = mrca_cdf(&q, 0.5, 0.0, len).unwrap();
        let r2 = binomial_z_report("pair-mrca-cdf", "cdf", below_half, reps, at_half, 3.5);
        assert!(r2.pass, "cdf z = {}", r2.value);
        assert!(sample_pair_mrca(&q, 0.0, &mut rng).is_err());
    }

    #[test]
    fn cpp_atom_count_matches_tail_intensity() {
        // beta = 0, sigma2 = 2: atoms deeper than t have intensity 1/t per
        // unit length.
        let p = params(2.0, 0.0);
        let mut rng = seeded_rng(0x0f_e2);
        let cpp = sample_cpp(&p, 50.0, 0.01, &mut rng).unwrap();
        assert_eq!(cpp.t_min(), 0.01);
        let n = cpp.atoms().len() as f64;
        let mean = 50.0 / 0.01;
        assert!((n - mean).abs() < 5.0 * mean.sqrt(), "atom count {n}");
        let deeper = cpp.atoms().iter().filter(|a| a.1 > 0.1).count() as f64;
        let mean_deep = 50.0 / 0.1;
        assert!((deeper - mean_deep).abs() < 5.0 * mean_deep.sqrt());
        // Positions strictly increasing, no infinite depths at beta = 0,
        // depths at or above the cutoff up to roundoff.
        for w in cpp.atoms().windows(2) {
            assert!(w[0].0 < w[1].0);
        }
        assert!(cpp.infinite_atoms().is_empty());
        assert!(cpp.atoms().iter().all(|a| a.1.is_finite() && a.1 > 0.0099));
    }

    #[test]
    fn cpp_window_queries_match_cdf() {
        let p = params(2.0, -0.5);
        let mut rng = seeded_rng(0x0f_e3);
        // Disjoint windows of one comb are independent, so each (t, length)
        // pair gives a clean binomial count.
        let cases = [(0.5, 1.0), (1.0, 1.0), (2.0, 0.5)];
        for (t, len) in cases {
            let windows = 2_000u64;
            let stride = len + 0.25;
            let x_max = windows as f64 * stride;
            let cpp = sample_cpp(&p, x_max, 0.05, &mut rng).unwrap();
            let mut hits = 0u64;
            for i in 0..windows {
                let x = i as f64 * stride;
                if cpp.mrca(x, x + len).unwrap() <= t {
                    hits += 1;
                }
            }
            let p0 = mrca_cdf(&p, t, 0.0, len).unwrap();
            let r = binomial_z_report("cpp-window", "cdf", hits, windows, p0, 3.5);
            assert!(r.pass, "t = {t}, len = {len}: z = {}", r.value);
        }
    }

    #[test]
    fn cpp_infinite_atoms_match_prolific_law() {
        // beta = -1, sigma2 = 2: infinite-depth positions are Poisson(1).
        // Compare the first such position per replicate against the direct
        // sampler by a two-sample KS test.
        let p = params(2.0, -1.0);
        let mut rng = seeded_rng(0x0f_e4);
        let mut via_cpp = Vec::new();
        let mut direct = Vec::new();
        for _ in 0..1_200 {
            let cpp = sample_cpp(&p, 6.0, 1.0, &mut rng).unwrap();
            if let Some(&x) = cpp.infinite_atoms().first() {
                via_cpp.push(x);
            }
            if let Some(&x) = prolific_points(&p, 6.0, &mut rng).unwrap().first() {
                direct.push(x);
            }
        }
        // P(no point on [0, 6]) = e^{-6}, so nearly every replicate counts.
        assert!(via_cpp.len() > 1_100 && direct.len() > 1_100);
        let r = ks_test_two_sample("cpp-vs-prolific", "first point", &via_cpp, &direct, 0.01)
            .unwrap();
        assert!(r.pass, "p = {:?}", r.p_value);

        let counts: Vec<f64> = (0..800u64)
            .map(|i| {
                let mut rng = derived_rng(0x0f_e5, i);
                prolific_points(&p, 10.0, &mut rng).unwrap().len() as f64
            })
            .collect();
        let (m, se) = mean_se(&counts);
        assert!((m - 10.0).abs() < 3.5 * se, "prolific mean {m}");

        assert!(prolific_points(&params(2.0, 0.0), 5.0, &mut rng).is_err());
        assert!(prolific_points(&params(2.0, 1.0), 5.0, &mut rng).is_err());
        let sup = sample_cpp(&params(2.0, 1.0), 80.0, 0.1, &mut rng).unwrap();
        assert!(sup.infinite_atoms().is_empty());
    }

    #[test]
    fn max_stability_of_window_times() {
        // T(x, z) and max(T(x, y), T(y, z)) agree in law.
        let p = params(2.0, 0.0);
        let mut rng = seeded_rng(0x0f_e6);
        let mut whole = Vec::with_capacity(4_000);
        let mut pieced = Vec::with_capacity(4_000);
        for _ in 0..4_000 {
            whole.push(sample_pair_mrca(&p, 2.0, &mut rng).unwrap());
            let a = sample_pair_mrca(&p, 1.2, &mut rng).unwrap();
            let b = sample_pair_mrca(&p, 0.8, &mut rng).unwrap();
            pieced.push(a.max(b));
        }
        let r = ks_test_two_sample("max-stability", "window split", &whole, &pieced, 0.01)
            .unwrap();
        assert!(r.pass, "p = {:?}", r.p_value);
    }

    #[test]
    fn mrca_query_takes_deepest_covered_atom() {
        let cpp = CoalescentPointProcess {
            x_max: 4.0,
            t_min: 0.1,
            atoms: vec![(1.0, 0.3), (2.0, 5.0), (3.0, 0.7)],
        };
        assert_eq!(cpp.mrca(0.5, 1.5).unwrap(), 0.3);
        assert_eq!(cpp.mrca(1.5, 3.5).unwrap(), 5.0);
        assert_eq!(cpp.mrca(0.1, 0.9).unwrap(), 0.0);
        assert_eq!(cpp.mrca(2.2, 3.0).unwrap(), 0.7);
        // The window is closed; a degenerate one is its own ancestor.
        assert_eq!(cpp.mrca(2.0, 2.2).unwrap(), 5.0);
        assert_eq!(cpp.mrca(1.5, 2.0).unwrap(), 5.0);
        assert_eq!(cpp.mrca(2.0, 2.0).unwrap(), 0.0);
        assert!(cpp.mrca(-0.1, 1.0).is_err());
        assert!(cpp.mrca(1.0, 4.5).is_err());
        assert!(cpp.mrca(2.0, 1.0).is_err());
    }

    #[test]
    fn binary_merging_holds_and_rejects_degenerate_input() {
        let p = params(2.0, 0.0);
        let mut rng = seeded_rng(0x0f_e7);
        for _ in 0..10_000 {
            assert!(binary_merging_check(&p, &[0.0, 1.0, 2.5, 3.0], &mut rng).unwrap());
        }
        let q = params(2.0, -2.0);
        for _ in 0..2_000 {
            assert!(binary_merging_check(&q, &[0.0, 0.4, 0.9], &mut rng).unwrap());
        }
        assert!(binary_merging_check(&p, &[0.0, 1.0], &mut rng).is_err());
        assert!(binary_merging_check(&p, &[0.0, 0.0, 1.0], &mut rng).is_err());
        assert!(binary_merging_check(&p, &[0.0, 1.0, 0.5], &mut rng).is_err());
    }

    #[test]
    fn csv_renders_infinite_depths() {
        let p = params(2.0, -1.0);
        let mut rng = seeded_rng(0x0f_e8);
        // P(no infinite atom on [0, 10]) = e^{-10}; this seed has several.
        let cpp = sample_cpp(&p, 10.0, 0.5, &mut rng).unwrap();
        let csv = cpp.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,depth"));
        assert_eq!(csv.lines().count(), cpp.atoms().len() + 1);
        assert!(!cpp.infinite_atoms().is_empty());
        assert!(csv.lines().any(|l| l.ends_with(",inf")));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let p = params(2.0, -0.3);
        let a = sample_cpp(&p, 20.0, 0.05, &mut seeded_rng(7)).unwrap();
        let b = sample_cpp(&p, 20.0, 0.05, &mut seeded_rng(7)).unwrap();
        assert_eq!(a.atoms(), b.atoms());
        assert!(sample_cpp(&p, 0.0, 0.05, &mut seeded_rng(7)).is_err());
        assert!(sample_cpp(&p, 10.0, 0.0, &mut seeded_rng(7)).is_err());
    }
}
