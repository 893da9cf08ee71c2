//! Poisson boxes: exchangeable-by-construction consecutive partitions built
//! from a subordinator and an independent Poisson arrival stream. Arrivals at
//! rate lam on the value axis are pulled back through the path's right
//! inverse; arrivals sharing an inverse value form a block. The block sizes
//! are i.i.d. with a law determined by the Laplace exponent alone, which this
//! module computes in closed form (named exponents) or by quadrature, so the
//! pathwise and law-driven constructions can be checked against each other.

use rand::Rng;
use rand_distr::Distribution;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::flow::{self, SubordinatorPath};
use crate::mechanism::{poisson_pmf, poisson_tail, DensityFn};
use crate::numerics::quad;
use crate::partition::ConsecutivePartition;

const QUAD_REL: f64 = 1e-9;
const QUAD_ABS: f64 = 1e-12;

/// Truncation tolerance for exponents whose block law has no exact tail
/// continuation (atomic and density-specified jump parts).
const TAIL_TOL: f64 = 1e-6;

#[derive(Clone)]
enum JumpPart {
    None,
    /// rate * mu / (jump_rate + mu): compound Poisson, arrival intensity
    /// `rate`, Exp(jump_rate) jump sizes.
    ExpJumps { rate: f64, jump_rate: f64 },
    /// coef * mu^index with index in (0, 1): stable jump part.
    Power { coef: f64, index: f64 },
    /// Finitely many atoms (size, rate): sum of r (1 - e^{-mu h}).
    Atoms { atoms: Vec<(f64, f64)> },
    /// Absolutely continuous Lévy density on (0, inf); quadrature route.
    Density { density: DensityFn },
}

/// Laplace exponent phi(mu) = kill + drift * mu + jump part, the law of a
/// (possibly killed) subordinator. phi(0) = kill; phi is increasing and
/// concave on [0, inf).
#[derive(Clone)]
pub struct LaplaceExponent {
    drift: f64,
    kill: f64,
    jump: JumpPart,
}

impl std::fmt::Debug for LaplaceExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let jump = match &self.jump {
            JumpPart::None => "none".to_string(),
            JumpPart::ExpJumps { rate, jump_rate } => {
                format!("exp-jumps(rate={rate}, jump_rate={jump_rate})")
            }
            JumpPart::Power { coef, index } => format!("{coef} mu^{index}"),
            JumpPart::Atoms { atoms } => format!("atoms({atoms:?})"),
            JumpPart::Density { .. } => "density(..)".to_string(),
        };
        f.debug_struct("LaplaceExponent")
            .field("drift", &self.drift)
            .field("kill", &self.kill)
            .field("jump", &jump)
            .finish()
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("{name} must be finite and >= 0, got {x}")));
    }
    Ok(x)
}

impl LaplaceExponent {
    /// Exponent of the diffusion flow map x -> X_t(x): a compound Poisson
    /// subordinator with phi = v_t, the cumulant at time t.
    pub fn feller_at(sigma2: f64, beta: f64, t: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !beta.is_finite() {
            return Err(Error::domain("beta must be finite"));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("t must be positive, got {t}")));
        }
        let b = flow::feller_bhat(sigma2, beta, t);
        Ok(LaplaceExponent {
            drift: 0.0,
            kill: 0.0,
            jump: JumpPart::ExpJumps { rate: b * (beta * t).exp(), jump_rate: b },
        })
    }

    /// Exponent of the Neveu flow map at time t: phi(mu) = mu^{e^{-t}}.
    pub fn neveu_at(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("t must be positive, got {t}")));
        }
        Self::power(1.0, (-t).exp())
    }

    /// Exponent of the explosive square-root flow at time t:
    /// phi(mu) = (sqrt(mu) + t/2)^2 = mu + t sqrt(mu) + t^2/4, a killed
    /// subordinator with unit drift.
    pub fn explosive_sqrt_at(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("t must be positive, got {t}")));
        }
        Ok(LaplaceExponent {
            drift: 1.0,
            kill: t * t / 4.0,
            jump: JumpPart::Power { coef: t, index: 0.5 },
        })
    }

    /// phi(mu) = coef * mu^index, 0 < index < 1.
    pub fn power(coef: f64, index: f64) -> Result<Self> {
        if !(coef > 0.0) || !coef.is_finite() {
            return Err(Error::domain(format!("coef must be positive, got {coef}")));
        }
        if !(index > 0.0 && index < 1.0) {
            return Err(Error::domain(format!("index must lie in (0,1), got {index}")));
        }
        Ok(LaplaceExponent { drift: 0.0, kill: 0.0, jump: JumpPart::Power { coef, index } })
    }

    /// phi(mu) = d * mu.
    pub fn pure_drift(d: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("drift must be positive, got {d}")));
        }
        Ok(LaplaceExponent { drift: d, kill: 0.0, jump: JumpPart::None })
    }

    /// Compound Poisson exponent with atomic jump law:
    /// phi(mu) = sum r_i (1 - e^{-mu h_i}).
    pub fn finite_atomic(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("need at least one atom"));
        }
        for &(h, r) in &atoms {
            if !(h > 0.0) || !h.is_finite() || !(r > 0.0) || !r.is_finite() {
                return Err(Error::domain(format!("atom (size {h}, rate {r}) must be positive")));
            }
        }
        Ok(LaplaceExponent { drift: 0.0, kill: 0.0, jump: JumpPart::Atoms { atoms } })
    }

    /// Exponent specified by drift, kill rate, and a Lévy density on
    /// (0, inf). Monotonicity and concavity are spot-checked on a dyadic
    /// grid, which catches densities that are not genuinely nonnegative.
    pub fn from_density(drift: f64, kill: f64, density: DensityFn) -> Result<Self> {
        let exp = LaplaceExponent {
            drift: check_nonneg("drift", drift)?,
            kill: check_nonneg("kill", kill)?,
            jump: JumpPart::Density { density },
        };
        let mut prev_phi = exp.kill;
        let mut prev_inc: Option<f64> = None;
        let mut prev_mu = 0.0;
        for j in -4..=4 {
            let mu = 2.0_f64.powi(j);
            let p = exp.phi(mu)?;
            let inc = (p - prev_phi) / (mu - prev_mu);
            if p < prev_phi - 1e-9 {
                return Err(Error::domain("density exponent is not nondecreasing"));
            }
            if let Some(pi) = prev_inc {
                if inc > pi * (1.0 + 1e-7) + 1e-12 {
                    return Err(Error::domain("density exponent is not concave"));
                }
            }
            prev_inc = Some(inc);
            prev_phi = p;
            prev_mu = mu;
        }
        Ok(exp)
    }

    pub fn with_kill(mut self, kill: f64) -> Result<Self> {
        self.kill = check_nonneg("kill", kill)?;
        Ok(self)
    }

    pub fn with_drift(mut self, drift: f64) -> Result<Self> {
        self.drift = check_nonneg("drift", drift)?;
        Ok(self)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn kill(&self) -> f64 {
        self.kill
    }

    /// Evaluate phi(mu), mu >= 0.
    pub fn phi(&self, mu: f64) -> Result<f64> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::domain(format!("mu must be finite and >= 0, got {mu}")));
        }
        let jump = match &self.jump {
            JumpPart::None => 0.0,
            JumpPart::ExpJumps { rate, jump_rate } => {
                if mu == 0.0 { 0.0 } else { rate * mu / (jump_rate + mu) }
            }
            JumpPart::Power { coef, index } => coef * mu.powf(*index),
            JumpPart::Atoms { atoms } => {
                atoms.iter().map(|&(h, r)| r * (-(-mu * h).exp_m1())).sum()
            }
            JumpPart::Density { density } => {
                if mu == 0.0 {
                    0.0
                } else {
                    let f = |x: f64| (-(-mu * x).exp_m1()) * density(x);
                    // The tail is folded onto (0, 1] by x = 1/w so that a
                    // power-law density lands on the substitution that
                    // resolves power behavior at the endpoint.
                    let tail = |w: f64| f(1.0 / w) / (w * w);
                    quad::integrate_from_zero(&f, 1.0, QUAD_REL, QUAD_ABS)?
                        + quad::integrate_from_zero(&tail, 1.0, QUAD_REL, QUAD_ABS)?
                }
            }
        };
        Ok(self.kill + self.drift * mu + jump)
    }
}

/// How mass beyond the tabulated range is drawn. Geometric and Sibuya
/// continuations are exact conditional laws; `None` means the tail is below
/// the truncation tolerance and a draw there lands on the first uncovered
/// size.
#[derive(Debug, Clone, Copy)]
enum TailLaw {
    None,
    Geometric { ratio: f64 },
    Sibuya { a: f64 },
}

/// Size of one box block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeDraw {
    Finite(u64),
    Infinite,
}

/// Law of a single block of the Poisson box at arrival rate lam:
/// P(k) = (-1)^{k-1} lam^k phi^{(k)}(lam) / (k! phi(lam)) for finite k, plus
/// an atom P(inf) = kill / phi(lam). Tabulated to k_max with the remaining
/// finite-size mass held explicitly; `pmf + tail + p_inf` sums to 1.
#[derive(Debug, Clone)]
pub struct BlockSizeLaw {
    pmf: Vec<f64>,
    p_inf: f64,
    tail: f64,
    tail_law: TailLaw,
    cum: Vec<f64>,
}

/// Sibuya survival P(K > m) for the normalized power law:
/// product_{j=1..m} (j - a)/j = Gamma(m+1-a) / (Gamma(1-a) Gamma(m+1)).
fn sibuya_survival(m: u64, a: f64) -> f64 {
    (ln_gamma(m as f64 + 1.0 - a) - ln_gamma(m as f64 + 1.0) - ln_gamma(1.0 - a)).exp()
}

/// Exact draw from the Sibuya tail conditioned on K > m, by bisection on the
/// survival ratio P(K > k | K > m).
fn sibuya_conditional_tail(m: u64, a: f64, rng: &mut impl Rng) -> u64 {
    const CAP: u64 = 1 << 50;
    let base = ln_gamma(m as f64 + 1.0 - a) - ln_gamma(m as f64 + 1.0);
    let survival = |k: u64| -> f64 {
        (ln_gamma(k as f64 + 1.0 - a) - ln_gamma(k as f64 + 1.0) - base).exp()
    };
    let u = 1.0 - rng.random::<f64>();
    let mut hi = (2 * m).max(2);
    while survival(hi) >= u && hi < CAP {
        hi *= 2;
    }
    if hi >= CAP {
        return CAP;
    }
    // Smallest k with survival(k) < u; survival(lo) >= u throughout.
    let mut lo = m;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if survival(mid) >= u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Block-size law of the box with exponent `exp` at arrival rate `lam`,
/// tabulated for sizes 1..=k_max. Exponents with analytic derivatives
/// (drift, exponential-jump, power, atomic) are evaluated in closed form;
/// density-specified exponents go through quadrature and must leave less
/// than 1e-6 of untabulated mass (raise k_max otherwise).
pub fn block_size_law(exp: &LaplaceExponent, lam: f64, k_max: usize) -> Result<BlockSizeLaw> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::domain(format!("lam must be positive, got {lam}")));
    }
    if k_max < 1 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    let phi_lam = exp.phi(lam)?;
    if !(phi_lam > 0.0) {
        return Err(Error::domain("degenerate exponent: phi(lam) = 0"));
    }
    let p_inf = exp.kill / phi_lam;

    let mut pmf = vec![0.0f64; k_max];
    let tail_jump;
    let tail_law;
    match &exp.jump {
        JumpPart::None => {
            tail_jump = 0.0;
            tail_law = TailLaw::None;
        }
        JumpPart::ExpJumps { rate, jump_rate } => {
            let b = *jump_rate;
            let q = lam / (b + lam);
            let mut g = rate * b * lam / ((b + lam) * (b + lam));
            for cell in pmf.iter_mut() {
                *cell = g;
                g *= q;
            }
            // g now holds the k_max+1 term; geometric remainder is exact.
            tail_jump = g / (1.0 - q);
            tail_law = TailLaw::Geometric { ratio: q };
        }
        JumpPart::Power { coef, index } => {
            let a = *index;
            let mut s = coef * a * lam.powf(a);
            for (k, cell) in pmf.iter_mut().enumerate() {
                *cell = s;
                s *= (k as f64 + 1.0 - a) / (k as f64 + 2.0);
            }
            tail_jump = coef * lam.powf(a) * sibuya_survival(k_max as u64, a);
            tail_law = TailLaw::Sibuya { a };
        }
        JumpPart::Atoms { atoms } => {
            for (k, cell) in pmf.iter_mut().enumerate() {
                *cell = atoms
                    .iter()
                    .map(|&(h, r)| r * poisson_pmf(k as u64 + 1, lam * h))
                    .sum();
            }
            tail_jump = atoms
                .iter()
                .map(|&(h, r)| r * poisson_tail(k_max as u64 + 1, lam * h))
                .sum();
            tail_law = TailLaw::None;
        }
        JumpPart::Density { density } => {
            let mut covered = 0.0;
            for (k, cell) in pmf.iter_mut().enumerate() {
                let kk = k as u64 + 1;
                let f = |x: f64| poisson_pmf(kk, lam * x) * density(x);
                let v = quad::integrate_from_zero(&f, 1.0, QUAD_REL, QUAD_ABS)?
                    + quad::integrate_to_inf(&f, 1.0, QUAD_REL, QUAD_ABS)?;
                *cell = v.max(0.0);
                covered += *cell;
            }
            let phi_jump = phi_lam - exp.kill - exp.drift * lam;
            tail_jump = (phi_jump - covered).max(0.0);
            tail_law = TailLaw::None;
        }
    }
    pmf[0] += exp.drift * lam;
    for cell in pmf.iter_mut() {
        *cell /= phi_lam;
    }
    let tail = tail_jump / phi_lam;
    if matches!(exp.jump, JumpPart::Atoms { .. } | JumpPart::Density { .. }) && tail > TAIL_TOL {
        return Err(Error::domain(format!(
            "untabulated block mass {tail:.3e} exceeds {TAIL_TOL:.0e}; raise k_max"
        )));
    }

    let mut cum = Vec::with_capacity(k_max + 1);
    let mut acc = 0.0;
    for p in &pmf {
        acc += p;
        cum.push(acc);
    }
    cum.push(acc + tail);
    let total = acc + tail + p_inf;
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::inconsistency(format!(
            "block law mass {total} differs from 1 beyond tolerance"
        )));
    }
    Ok(BlockSizeLaw { pmf, p_inf, tail, tail_law, cum })
}

impl BlockSizeLaw {
    pub fn k_max(&self) -> u64 {
        self.pmf.len() as u64
    }

    /// P(block size = k) for tabulated k; sizes past k_max contribute to
    /// `tail_mass`, not to this table.
    pub fn pmf(&self, k: u64) -> f64 {
        if k >= 1 && k <= self.pmf.len() as u64 { self.pmf[k as usize - 1] } else { 0.0 }
    }

    pub fn pmf_table(&self) -> &[f64] {
        &self.pmf
    }

    pub fn p_inf(&self) -> f64 {
        self.p_inf
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    /// One exact draw of a block size.
    pub fn sample_size(&self, rng: &mut impl Rng) -> SizeDraw {
        let u: f64 = rng.random();
        let last = *self.cum.last().expect("cumulative table is nonempty");
        if u >= last && self.p_inf > 0.0 {
            return SizeDraw::Infinite;
        }
        let idx = self.cum.partition_point(|&c| c <= u);
        if idx < self.pmf.len() {
            return SizeDraw::Finite(idx as u64 + 1);
        }
        let m = self.pmf.len() as u64;
        match self.tail_law {
            TailLaw::Geometric { ratio } => {
                let v = 1.0 - rng.random::<f64>();
                let extra = (v.ln() / ratio.ln()).floor().max(0.0) as u64;
                SizeDraw::Finite(m + 1 + extra)
            }
            TailLaw::Sibuya { a } => SizeDraw::Finite(sibuya_conditional_tail(m, a, rng)),
            TailLaw::None => SizeDraw::Finite(m + 1),
        }
    }
}

/// Box partition restricted to ground [n]: i.i.d. block sizes until the
/// ground is covered, the final block truncated to fit. An infinite draw
/// covers the whole remaining ground.
pub fn sample_box_direct(
    law: &BlockSizeLaw,
    n: u64,
    rng: &mut impl Rng,
) -> Result<ConsecutivePartition> {
    if n < 1 {
        return Err(Error::domain("ground size must be at least 1"));
    }
    let mut sizes = Vec::new();
    let mut remaining = n;
    while remaining > 0 {
        let take = match law.sample_size(rng) {
            SizeDraw::Finite(k) => k.min(remaining),
            SizeDraw::Infinite => remaining,
        };
        sizes.push(take);
        remaining -= take;
    }
    ConsecutivePartition::from_sizes(sizes)
}

/// Box partition of the whole ground for a killed exponent: finite blocks
/// until the kill produces the terminal infinite block. The number of blocks
/// is geometric with success probability kill / phi(lam).
pub fn sample_box_killed(law: &BlockSizeLaw, rng: &mut impl Rng) -> Result<ConsecutivePartition> {
    if !(law.p_inf > 0.0) {
        return Err(Error::domain("killed sampling needs an exponent with kill > 0"));
    }
    let mut sizes = Vec::new();
    loop {
        match law.sample_size(rng) {
            SizeDraw::Finite(k) => sizes.push(k),
            SizeDraw::Infinite => return ConsecutivePartition::from_sizes_with_infinite(sizes),
        }
    }
}

/// Right inverse of a subordinator path evaluated at increasing levels. The
/// pullback construction is generic over this so that paths too active to
/// materialize (stable) can be inverted lazily yet exactly.
pub trait ArrivalInverter {
    fn invert_levels<R: Rng>(&mut self, levels: &[f64], rng: &mut R) -> Result<Vec<f64>>;
}

/// Inverter over an already materialized path. Levels beyond the path's
/// final value are range errors.
pub struct FixedPathInverter<'a> {
    path: &'a SubordinatorPath,
}

impl<'a> FixedPathInverter<'a> {
    pub fn new(path: &'a SubordinatorPath) -> Self {
        FixedPathInverter { path }
    }
}

impl ArrivalInverter for FixedPathInverter<'_> {
    fn invert_levels<R: Rng>(&mut self, levels: &[f64], _rng: &mut R) -> Result<Vec<f64>> {
        levels.iter().map(|&y| self.path.right_inverse(y)).collect()
    }
}

/// Inverter over the diffusion flow map at time t, extending the path with
/// independent increments whenever a level lies past the current horizon.
pub struct FellerPathInverter {
    sigma2: f64,
    beta: f64,
    t: f64,
    path: SubordinatorPath,
}

impl FellerPathInverter {
    pub fn new(sigma2: f64, beta: f64, t: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !beta.is_finite() || !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain("beta must be finite and t positive"));
        }
        Ok(FellerPathInverter {
            sigma2,
            beta,
            t,
            path: SubordinatorPath::new(0.0, Vec::new(), 0.0)?,
        })
    }

    fn total_value(&self) -> f64 {
        self.path.jumps().iter().map(|&(_, s)| s).sum()
    }
}

impl ArrivalInverter for FellerPathInverter {
    fn invert_levels<R: Rng>(&mut self, levels: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let top = levels.iter().fold(0.0f64, |m, &y| m.max(y));
        // Mean slope of the path is e^{beta t}; grow geometrically from a
        // horizon sized for the deepest level.
        let mut step = ((top + 1.0) * (-self.beta * self.t).exp()).max(1.0);
        while self.total_value() <= top {
            let segment = flow::sample_feller_forward(self.sigma2, self.beta, self.t, step, rng)?;
            self.path.concat(&segment)?;
            step *= 2.0;
        }
        levels.iter().map(|&y| self.path.right_inverse(y)).collect()
    }
}

/// Lazy exact inverter for the stable subordinator of index `a` (the Neveu
/// flow map at time t has a = e^{-t}). The path has infinite activity, so
/// instead of materializing jumps the inverter walks first-passage to
/// first-passage: a level landing under the current overshoot shares the
/// previous inverse value; otherwise a fresh passage advances the position.
pub struct StableInverter {
    a: f64,
    position: f64,
    last_level: f64,
    overshoot: f64,
}

impl StableInverter {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::domain(format!("stable index must lie in (0,1), got {a}")));
        }
        Ok(StableInverter { a, position: 0.0, last_level: 0.0, overshoot: 0.0 })
    }
}

impl ArrivalInverter for StableInverter {
    fn invert_levels<R: Rng>(&mut self, levels: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let mut xs = Vec::with_capacity(levels.len());
        for &y in levels {
            if y <= self.last_level {
                return Err(Error::domain("levels must be strictly increasing"));
            }
            let gap = y - self.last_level;
            if gap < self.overshoot {
                self.overshoot -= gap;
            } else {
                let beyond = (gap - self.overshoot).max(f64::MIN_POSITIVE);
                let (tau, over) = flow::stable_first_passage(self.a, beyond, rng);
                self.position += tau;
                self.overshoot = over;
            }
            self.last_level = y;
            xs.push(self.position);
        }
        Ok(xs)
    }
}

/// Pathwise box on ground [arrivals]: Poisson(lam) arrival levels pulled
/// back through the path's right inverse; equal inverse values form blocks.
/// Returns the partition and the distinct inverse values, whose gaps are
/// Exp(phi(lam)) when the path matches the exponent.
pub fn sample_box_pullback<I: ArrivalInverter, R: Rng>(
    inverter: &mut I,
    lam: f64,
    arrivals: u64,
    rng: &mut R,
) -> Result<(ConsecutivePartition, Vec<f64>)> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::domain(format!("lam must be positive, got {lam}")));
    }
    if arrivals < 1 {
        return Err(Error::domain("need at least one arrival"));
    }
    let gap = rand_distr::Exp::new(lam).map_err(|e| Error::domain(format!("arrival rate: {e}")))?;
    let mut levels = Vec::with_capacity(arrivals as usize);
    let mut acc = 0.0;
    for _ in 0..arrivals {
        acc += gap.sample(rng);
        levels.push(acc);
    }
    let xs = inverter.invert_levels(&levels, rng)?;

    let mut sizes = Vec::new();
    let mut distinct = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 && x < xs[i - 1] {
            return Err(Error::inconsistency("inverse values must be nondecreasing"));
        }
        if distinct.last() == Some(&x) {
            *sizes.last_mut().expect("sizes nonempty alongside distinct") += 1;
        } else {
            distinct.push(x);
            sizes.push(1u64);
        }
    }
    Ok((ConsecutivePartition::from_sizes(sizes)?, distinct))
}
