//! Coalescents on consecutive blocks. A state is a partition of `1..=n` into
//! consecutive blocks; an interior event merges `k` adjacent blocks at rate
//! `mass(k)` per position, an edge event absorbs every block from position `j`
//! on at the tail rate. Time-homogeneous chains run by direct Gillespie
//! sampling; chains embedded in a flow at sampling intensity `lam` (or entered
//! from infinity) run by thinning against gridded rate envelopes. Small-`n`
//! matrix-exponential oracles provide exact laws to validate against, next to
//! closed forms for marginal block counts, singleton fractions and reduced
//! trees, and the pathwise interval genealogy of the diffusion flow.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde_json::json;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::flow;
use crate::mechanism::{self, BranchingMechanism, CriticalityKind, LevyFamily};
use crate::numerics::matexp::{expm, Matrix};
use crate::numerics::quad;
use crate::partition::{self, ConsecutivePartition, MergeEvent};

/// Default entrance time for samplers started from infinitely many blocks:
/// the state at any positive time is finite, so the chain is launched from
/// the exact marginal law this close to zero.
pub const DEFAULT_INF_START: f64 = 0.01;

/// Proposals per envelope segment are capped by splitting `[t, t_end]` into
/// pieces of at most this length before each envelope is computed.
const SEGMENT_LEN: f64 = 0.25;

/// Points in the envelope grid of `RateSchedule::bound`.
const BOUND_GRID: usize = 33;

/// Envelope slack over the gridded maximum.
const BOUND_SLACK: f64 = 1.5;

// ---------------------------------------------------------------------------
// Reproduction measures

/// Tabulated merge intensities of a time-homogeneous consecutive coalescent:
/// `mass(k)` is the rate at which `k` given adjacent blocks merge, `tail(k)`
/// the rate at which a given block and everything after it is absorbed when
/// `k` slots remain. Tabulated for `k = 2..=cap`; `tail(cap + 1)` holds the
/// aggregate edge rate beyond the table, so `tail(k) - tail(k + 1) = mass(k)`
/// inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionMeasure {
    /// mass[i] is the rate for k = i + 2.
    mass: Vec<f64>,
    /// tail[i] is the edge rate for k = i + 2; one entry longer than mass.
    tail: Vec<f64>,
}

impl ReproductionMeasure {
    fn from_parts(mass: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::domain("the table needs at least the k = 2 entry".to_string()));
        }
        if tail.len() != mass.len() + 1 {
            return Err(Error::inconsistency(format!(
                "tail table has {} entries for {} masses, want one more",
                tail.len(),
                mass.len()
            )));
        }
        for (i, &x) in mass.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::domain(format!("mass({}) = {x} must be finite and >= 0", i + 2)));
            }
        }
        for (i, &x) in tail.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::domain(format!("tail({}) = {x} must be finite and >= 0", i + 2)));
            }
        }
        let scale = tail[0] + 1.0;
        for i in 0..mass.len() {
            let drop = tail[i] - tail[i + 1];
            if (drop - mass[i]).abs() > 1e-9 * scale {
                return Err(Error::inconsistency(format!(
                    "tail({}) - tail({}) = {drop} disagrees with mass = {}",
                    i + 2,
                    i + 3,
                    mass[i]
                )));
            }
        }
        Ok(ReproductionMeasure { mass, tail })
    }

    /// Builds the table from interior rates for `k = 2..` plus the aggregate
    /// edge rate `beyond` the largest tabulated size.
    pub fn new(mass: Vec<f64>, beyond: f64) -> Result<Self> {
        if !beyond.is_finite() || beyond < 0.0 {
            return Err(Error::domain(format!("beyond-table rate {beyond} must be finite and >= 0")));
        }
        let mut tail = vec![0.0; mass.len() + 1];
        *tail.last_mut().unwrap() = beyond;
        for i in (0..mass.len()).rev() {
            tail[i] = tail[i + 1] + mass[i];
        }
        ReproductionMeasure::from_parts(mass, tail)
    }

    /// Merge rates `1/(k(k-1))` with edge rates `1/(k-1)`: the table of the
    /// Neveu mechanism, the same at every sampling intensity.
    pub fn neveu(cap: u64) -> Result<Self> {
        if cap < 2 {
            return Err(Error::domain(format!("cap must be >= 2, got {cap}")));
        }
        let mass = (2..=cap).map(|k| 1.0 / (k * (k - 1)) as f64).collect();
        let tail = (2..=cap + 1).map(|k| 1.0 / (k - 1) as f64).collect();
        ReproductionMeasure::from_parts(mass, tail)
    }

    /// Reference table of the stable limit coalescent: merge weights
    /// `Gamma(k - alpha)/k!`, edge weights `Gamma(k - alpha)/(alpha (k-1)!)`.
    pub fn stable_limit(alpha: f64, cap: u64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::domain(format!("stable limit table needs alpha in (1, 2), got {alpha}")));
        }
        if cap < 2 {
            return Err(Error::domain(format!("cap must be >= 2, got {cap}")));
        }
        let mass = (2..=cap)
            .map(|k| {
                let kf = k as f64;
                (ln_gamma(kf - alpha) - ln_gamma(kf + 1.0)).exp()
            })
            .collect();
        let tail = (2..=cap + 1)
            .map(|k| {
                let kf = k as f64;
                (ln_gamma(kf - alpha) - ln_gamma(kf)).exp() / alpha
            })
            .collect();
        ReproductionMeasure::from_parts(mass, tail)
    }

    /// The restricted-rate table of `mech` frozen at ancestral intensity
    /// `theta`; diffusion enters the `k = 2` entries.
    pub fn from_mechanism(mech: &BranchingMechanism, theta: f64, cap: u64) -> Result<Self> {
        if cap < 2 {
            return Err(Error::domain(format!("cap must be >= 2, got {cap}")));
        }
        let mut mass = Vec::with_capacity((cap - 1) as usize);
        for k in 2..=cap {
            mass.push(mechanism::rate_measure(mech, theta, k)?);
        }
        let mut tail = Vec::with_capacity(cap as usize);
        for k in 2..=cap + 1 {
            tail.push(mechanism::rate_tail(mech, theta, k)?);
        }
        ReproductionMeasure::from_parts(mass, tail)
    }

    /// Largest tabulated interior merge size.
    pub fn cap(&self) -> u64 {
        self.mass.len() as u64 + 1
    }

    /// Interior merge rate of `k` adjacent blocks. Panics outside `2..=cap`.
    pub fn mass(&self, k: u64) -> f64 {
        assert!((2..=self.cap()).contains(&k), "mass({k}) is outside the table");
        self.mass[(k - 2) as usize]
    }

    /// Edge rate when `k` block slots remain. Panics outside `2..=cap + 1`.
    pub fn tail(&self, k: u64) -> f64 {
        assert!((2..=self.cap() + 1).contains(&k), "tail({k}) is outside the table");
        self.tail[(k - 2) as usize]
    }

    /// Interior rates for `k = 2..=m-1` and edge rates for `k = 2..=m`.
    fn rate_vectors(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        let r = self.mass[..m.saturating_sub(3) + usize::from(m >= 3)].to_vec();
        let tb = self.tail[..m - 1].to_vec();
        (r, tb)
    }

    fn check_supports(&self, n: usize) -> Result<()> {
        if (self.cap() as usize) < n.saturating_sub(1) {
            return Err(Error::domain(format!(
                "table cap {} cannot drive {n} starting blocks, need cap >= {}",
                self.cap(),
                n - 1
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Trajectories

/// A merge event stamped with the time it fired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedEvent {
    pub t: f64,
    pub event: MergeEvent,
}

/// One realization of a consecutive coalescent on `[t_start, horizon]`,
/// stored as its ordered event list plus reconstructed snapshots.
#[derive(Debug, Clone)]
pub struct CoalescentTrajectory {
    n: usize,
    t_start: f64,
    horizon: f64,
    events: Vec<TimedEvent>,
    snapshots: Vec<(f64, ConsecutivePartition)>,
}

impl CoalescentTrajectory {
    fn assemble(
        n: usize,
        t_start: f64,
        events: Vec<TimedEvent>,
        horizon: f64,
        final_state: ConsecutivePartition,
    ) -> Result<Self> {
        let mut prev = t_start;
        for e in &events {
            if !(e.t > prev && e.t < horizon) {
                return Err(Error::inconsistency(format!(
                    "event at t = {} breaks the strict order on ({prev}, {horizon})",
                    e.t
                )));
            }
            prev = e.t;
        }
        Ok(CoalescentTrajectory {
            n,
            t_start,
            horizon,
            events,
            snapshots: vec![(horizon, final_state)],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[TimedEvent] {
        &self.events
    }

    /// Stored snapshots, ordered by time; the last one sits at the horizon.
    pub fn snapshots(&self) -> &[(f64, ConsecutivePartition)] {
        &self.snapshots
    }

    pub fn final_state(&self) -> &ConsecutivePartition {
        &self.snapshots.last().unwrap().1
    }

    /// The state at `t`, replayed from the event list.
    pub fn state_at(&self, t: f64) -> Result<ConsecutivePartition> {
        if !(t >= self.t_start && t <= self.horizon) {
            return Err(Error::domain(format!(
                "t = {t} is outside [{}, {}]",
                self.t_start, self.horizon
            )));
        }
        let mut p = ConsecutivePartition::singletons(self.n)?;
        for e in &self.events {
            if e.t > t {
                break;
            }
            p = partition::apply_merge(&p, e.event)?;
        }
        Ok(p)
    }

    /// Stores the state at `t` among the snapshots.
    pub fn add_snapshot(&mut self, t: f64) -> Result<()> {
        let state = self.state_at(t)?;
        match self
            .snapshots
            .binary_search_by(|(s, _)| s.partial_cmp(&t).unwrap())
        {
            Ok(i) => self.snapshots[i].1 = state,
            Err(i) => self.snapshots.insert(i, (t, state)),
        }
        Ok(())
    }

    /// The trajectory as a JSON object: ground size, window, ordered events,
    /// snapshots keyed by time and rendered in block notation.
    pub fn to_json(&self) -> String {
        let events: Vec<_> = self
            .events
            .iter()
            .map(|e| {
                json!({
                    "t": e.t,
                    "j": e.event.j,
                    "k": e.event.k,
                    "boundary": e.event.boundary,
                })
            })
            .collect();
        let mut snaps = serde_json::Map::new();
        for (t, p) in &self.snapshots {
            snaps.insert(format!("{t}"), serde_json::Value::String(p.to_string()));
        }
        json!({
            "n": self.n,
            "t_start": self.t_start,
            "horizon": self.horizon,
            "events": events,
            "snapshots": snaps,
        })
        .to_string()
    }
}

// ---------------------------------------------------------------------------
// Event selection shared by both simulators

/// Total merge rate from `m` blocks given interior rates `r[k-2]` for
/// `k = 2..=m-1` and edge rates `tb[k-2]` for `k = 2..=m`: every interior
/// size has `m - k` admissible positions, every edge size exactly one.
fn total_rate_from(r: &[f64], tb: &[f64], m: usize) -> f64 {
    let mut total = 0.0;
    for k in 2..m {
        total += (m - k) as f64 * r[k - 2];
    }
    for k in 2..=m {
        total += tb[k - 2];
    }
    total
}

/// Maps a target in `[0, total)` to an event, walking positions `j` in
/// ascending order, interior sizes before the edge event at each position.
/// Floating-point leftovers fall through to the edge event at `j = m - 1`.
fn select_event(r: &[f64], tb: &[f64], m: usize, mut target: f64) -> MergeEvent {
    let mut prefix = Vec::with_capacity(r.len());
    let mut acc = 0.0;
    for &x in r {
        acc += x;
        prefix.push(acc);
    }
    for j in 1..m {
        let kmax = m - j;
        let interior = if kmax >= 2 { prefix[kmax - 2] } else { 0.0 };
        let edge = tb[m - j - 1];
        if target < interior + edge || j == m - 1 {
            if target < interior {
                let mut a = 0.0;
                for k in 2..=kmax {
                    a += r[k - 2];
                    if target < a {
                        return MergeEvent { j, k, boundary: false };
                    }
                }
            }
            return MergeEvent { j, k: 0, boundary: true };
        }
        target -= interior + edge;
    }
    MergeEvent { j: m - 1, k: 0, boundary: true }
}

fn sample_exp(rate: f64, rng: &mut impl Rng) -> Result<f64> {
    Ok(Exp::new(rate)
        .map_err(|e| Error::numerics(format!("exponential rate {rate}: {e}")))?
        .sample(rng))
}

// ---------------------------------------------------------------------------
// Homogeneous simulation

/// Runs the coalescent with constant rate table `mu` from `n` singleton
/// blocks over `[0, t_end]` by Gillespie sampling.
pub fn simulate_homogeneous(
    mu: &ReproductionMeasure,
    n: usize,
    t_end: f64,
    rng: &mut impl Rng,
) -> Result<CoalescentTrajectory> {
    if n == 0 {
        return Err(Error::domain("need at least one starting block".to_string()));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::domain(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    mu.check_supports(n)?;
    let mut state = ConsecutivePartition::singletons(n)?;
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let m = state.num_blocks();
        if m <= 1 {
            break;
        }
        let (r, tb) = mu.rate_vectors(m);
        let total = total_rate_from(&r, &tb, m);
        if !(total > 0.0) {
            break;
        }
        t += sample_exp(total, rng)?;
        if t >= t_end {
            break;
        }
        let event = select_event(&r, &tb, m, rng.random::<f64>() * total);
        state = partition::apply_merge(&state, event)?;
        events.push(TimedEvent { t, event });
    }
    CoalescentTrajectory::assemble(n, 0.0, events, t_end, state)
}

// ---------------------------------------------------------------------------
// Mechanism-driven schedules and inhomogeneous simulation

/// The `k`-merge weights of a jump family, when they factor through the
/// ancestral intensity as `coef * theta^exponent * w(k)`.
enum JumpProfile {
    /// Diffusion pair merges only.
    None,
    Scaled {
        exponent: f64,
        coef: f64,
        /// w[i] for k = i + 2, up to cap.
        w: Vec<f64>,
        /// Edge weights, one entry longer.
        wbar: Vec<f64>,
        /// Prefix sums of w, k * w, and wbar, aligned with w and wbar.
        cum_w: Vec<f64>,
        cum_kw: Vec<f64>,
        cum_wbar: Vec<f64>,
    },
    /// No usable factorization; every rate is a fresh mechanism evaluation.
    /// Fine for small studies, slow for the density family.
    General,
}

/// Time-dependent restricted rates of the coalescent embedded in the flow of
/// `mech` at sampling intensity `lam`, or along the entrance from infinity
/// when `lam` is infinite. The Neveu and stable families factor through
/// `theta(t)`, making total rates O(1) in the table size.
pub struct RateSchedule<'a> {
    mech: &'a BranchingMechanism,
    lam: f64,
    cap: u64,
    profile: JumpProfile,
    needs_theta: bool,
}

impl<'a> RateSchedule<'a> {
    pub fn new(mech: &'a BranchingMechanism, lam: f64, cap: u64) -> Result<Self> {
        if cap < 2 {
            return Err(Error::domain(format!("cap must be >= 2, got {cap}")));
        }
        if lam.is_infinite() {
            if lam < 0.0 {
                return Err(Error::domain("lam must be positive".to_string()));
            }
            if !mechanism::grey(mech)?.extinction {
                return Err(Error::domain(
                    "the entrance from infinity needs a finite extinction integral".to_string(),
                ));
            }
        } else if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::domain(format!("lam must be > 0, got {lam}")));
        }
        let profile = match &mech.levy {
            LevyFamily::None => JumpProfile::None,
            LevyFamily::Neveu => scaled_profile(0.0, 1.0, cap, |kf| -(kf.ln() + (kf - 1.0).ln()), |kf| -(kf - 1.0).ln()),
            LevyFamily::Stable { alpha, c } => {
                let a = *alpha;
                let cp = mechanism::stable_density_coeff(a, *c);
                scaled_profile(
                    a - 1.0,
                    cp,
                    cap,
                    |kf| ln_gamma(kf - a) - ln_gamma(kf + 1.0),
                    |kf| ln_gamma(kf - a) - ln_gamma(kf) - a.ln(),
                )
            }
            LevyFamily::FiniteAtomic { .. } | LevyFamily::TabulatedDensity { .. } => JumpProfile::General,
        };
        let needs_theta = mech.sigma2 > 0.0
            || match &profile {
                JumpProfile::None => false,
                JumpProfile::Scaled { exponent, .. } => *exponent != 0.0,
                JumpProfile::General => true,
            };
        Ok(RateSchedule { mech, lam, cap, profile, needs_theta })
    }

    pub fn mechanism(&self) -> &BranchingMechanism {
        self.mech
    }

    pub fn lam(&self) -> f64 {
        self.lam
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// The ancestral intensity driving the rates: `v_t(lam)`, or `v_t(inf)`
    /// on the entrance schedule.
    pub fn theta(&self, t: f64) -> Result<f64> {
        if self.lam.is_infinite() {
            mechanism::v_inf(self.mech, t)
        } else {
            mechanism::v(self.mech, t, self.lam)
        }
    }

    fn theta_if_needed(&self, t: f64) -> Result<f64> {
        if self.needs_theta {
            self.theta(t)
        } else {
            Ok(1.0)
        }
    }

    /// Interior rate of a `k`-merge at time `t`.
    pub fn rate(&self, t: f64, k: u64) -> Result<f64> {
        mechanism::rate_measure(self.mech, self.theta(t)?, k)
    }

    /// Edge rate when `k` block slots remain at time `t`.
    pub fn tail(&self, t: f64, k: u64) -> Result<f64> {
        mechanism::rate_tail(self.mech, self.theta(t)?, k)
    }

    /// Interior rates for `k = 2..=m-1` and edge rates for `k = 2..=m`.
    pub fn rate_vectors(&self, t: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if m < 2 {
            return Ok((Vec::new(), Vec::new()));
        }
        if (self.cap as usize) < m - 1 {
            return Err(Error::domain(format!(
                "table cap {} cannot drive {m} blocks",
                self.cap
            )));
        }
        let theta = self.theta_if_needed(t)?;
        let diff = 0.5 * self.mech.sigma2 * theta;
        match &self.profile {
            JumpProfile::None => {
                let mut r = vec![0.0; m - 2];
                let mut tb = vec![0.0; m - 1];
                if m >= 3 {
                    r[0] = diff;
                }
                tb[0] = diff;
                Ok((r, tb))
            }
            JumpProfile::Scaled { exponent, coef, w, wbar, .. } => {
                let s = coef * theta.powf(*exponent);
                let mut r: Vec<f64> = w[..m - 2].iter().map(|x| s * x).collect();
                let mut tb: Vec<f64> = wbar[..m - 1].iter().map(|x| s * x).collect();
                if m >= 3 {
                    r[0] += diff;
                }
                tb[0] += diff;
                Ok((r, tb))
            }
            JumpProfile::General => {
                let mut r = Vec::with_capacity(m - 2);
                for k in 2..m {
                    r.push(mechanism::rate_measure(self.mech, theta, k as u64)?);
                }
                let mut tb = Vec::with_capacity(m - 1);
                for k in 2..=m {
                    tb.push(mechanism::rate_tail(self.mech, theta, k as u64)?);
                }
                Ok((r, tb))
            }
        }
    }

    /// Total merge rate from `m` blocks at time `t`; O(1) for the factored
    /// families.
    pub fn total_rate(&self, t: f64, m: usize) -> Result<f64> {
        if m < 2 {
            return Ok(0.0);
        }
        if (self.cap as usize) < m - 1 {
            return Err(Error::domain(format!(
                "table cap {} cannot drive {m} blocks",
                self.cap
            )));
        }
        let theta = self.theta_if_needed(t)?;
        let diff = (m - 1) as f64 * 0.5 * self.mech.sigma2 * theta;
        match &self.profile {
            JumpProfile::None => Ok(diff),
            JumpProfile::Scaled { exponent, coef, cum_w, cum_kw, cum_wbar, .. } => {
                let s = coef * theta.powf(*exponent);
                let (w1, kw) = if m >= 3 { (cum_w[m - 3], cum_kw[m - 3]) } else { (0.0, 0.0) };
                Ok(diff + s * (m as f64 * w1 - kw + cum_wbar[m - 2]))
            }
            JumpProfile::General => {
                let (r, tb) = self.rate_vectors(t, m)?;
                Ok(total_rate_from(&r, &tb, m))
            }
        }
    }

    /// Thinning envelope over `[t0, t1]` for a state with `m` blocks:
    /// a slackened maximum of the total rate over an even grid. A proposal
    /// whose exact rate lands above the envelope is reported as an
    /// inconsistency by the simulator rather than silently clipped.
    pub fn bound(&self, t0: f64, t1: f64, m: usize) -> Result<f64> {
        if !(t1 >= t0) {
            return Err(Error::domain(format!("need t0 <= t1, got [{t0}, {t1}]")));
        }
        let mut mx = 0.0f64;
        for i in 0..BOUND_GRID {
            let t = t0 + (t1 - t0) * i as f64 / (BOUND_GRID - 1) as f64;
            mx = mx.max(self.total_rate(t, m)?);
        }
        Ok(BOUND_SLACK * mx)
    }
}

/// Tabulates `exp(ln_w(k))` weights with their edge sums and prefix sums.
fn scaled_profile(
    exponent: f64,
    coef: f64,
    cap: u64,
    ln_w: impl Fn(f64) -> f64,
    ln_wbar: impl Fn(f64) -> f64,
) -> JumpProfile {
    let w: Vec<f64> = (2..=cap).map(|k| ln_w(k as f64).exp()).collect();
    let wbar: Vec<f64> = (2..=cap + 1).map(|k| ln_wbar(k as f64).exp()).collect();
    let mut cum_w = Vec::with_capacity(w.len());
    let mut cum_kw = Vec::with_capacity(w.len());
    let mut a = 0.0;
    let mut b = 0.0;
    for (i, &x) in w.iter().enumerate() {
        a += x;
        b += (i + 2) as f64 * x;
        cum_w.push(a);
        cum_kw.push(b);
    }
    let mut cum_wbar = Vec::with_capacity(wbar.len());
    let mut c = 0.0;
    for &x in &wbar {
        c += x;
        cum_wbar.push(c);
    }
    JumpProfile::Scaled { exponent, coef, w, wbar, cum_w, cum_kw, cum_wbar }
}

/// Runs the embedded coalescent from `n` singleton blocks over
/// `[t_start, t_end]` by thinning: segment the window, propose at the
/// envelope rate, accept with the exact-to-envelope ratio. The envelope is
/// refreshed after every accepted event and every segment. An entrance
/// schedule needs `t_start > 0`; `DEFAULT_INF_START` is a practical choice.
pub fn simulate_inhomogeneous(
    sched: &RateSchedule,
    n: usize,
    t_start: f64,
    t_end: f64,
    rng: &mut impl Rng,
) -> Result<CoalescentTrajectory> {
    if n == 0 {
        return Err(Error::domain("need at least one starting block".to_string()));
    }
    if !t_start.is_finite() || !t_end.is_finite() || !(t_end >= t_start) {
        return Err(Error::domain(format!("bad time window [{t_start}, {t_end}]")));
    }
    if sched.lam().is_infinite() {
        if !(t_start > 0.0) {
            return Err(Error::domain(
                "an entrance schedule starts strictly after zero; see DEFAULT_INF_START".to_string(),
            ));
        }
    } else if t_start < 0.0 {
        return Err(Error::domain(format!("t_start must be >= 0, got {t_start}")));
    }
    if (sched.cap() as usize) < n.saturating_sub(1) {
        return Err(Error::domain(format!(
            "schedule cap {} cannot drive {n} starting blocks",
            sched.cap()
        )));
    }
    let mut state = ConsecutivePartition::singletons(n)?;
    let mut events = Vec::new();
    let mut t = t_start;
    let mut m = state.num_blocks();
    'outer: while m > 1 && t < t_end {
        // Entrance rates fall off steeply near zero, so early segments are
        // kept short relative to the elapsed time.
        let seg_len = if sched.lam().is_infinite() {
            (t * 0.5).clamp(1e-4, SEGMENT_LEN)
        } else {
            SEGMENT_LEN
        };
        let seg_end = (t + seg_len).min(t_end);
        let b = sched.bound(t, seg_end, m)?;
        if !(b > 0.0) {
            t = seg_end;
            continue;
        }
        let mut tp = t;
        loop {
            tp += sample_exp(b, rng)?;
            if tp >= seg_end {
                t = seg_end;
                continue 'outer;
            }
            let (r, tb) = sched.rate_vectors(tp, m)?;
            let total = total_rate_from(&r, &tb, m);
            if total > b * (1.0 + 1e-9) {
                return Err(Error::inconsistency(format!(
                    "total rate {total} exceeds its envelope {b} at t = {tp}"
                )));
            }
            if rng.random::<f64>() * b < total {
                let event = select_event(&r, &tb, m, rng.random::<f64>() * total);
                state = partition::apply_merge(&state, event)?;
                events.push(TimedEvent { t: tp, event });
                m = state.num_blocks();
                t = tp;
                continue 'outer;
            }
        }
    }
    CoalescentTrajectory::assemble(n, t_start, events, t_end, state)
}

// ---------------------------------------------------------------------------
// Exact finite-state oracles

/// Every composition of `n` as a consecutive partition, in lexicographic
/// order of the size sequence read from the left.
pub fn enumerate_compositions(n: usize) -> Result<Vec<ConsecutivePartition>> {
    if n == 0 || n > 16 {
        return Err(Error::domain(format!("composition enumeration covers 1..=16, got {n}")));
    }
    fn rec(left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for a in 1..=left {
            cur.push(a);
            rec(left - a, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n as u64, &mut Vec::new(), &mut raw);
    raw.into_iter().map(ConsecutivePartition::from_sizes).collect()
}

/// A probability vector over the compositions of some `n`, indexed for
/// empirical lookups.
#[derive(Debug, Clone)]
pub struct PartitionDistribution {
    states: Vec<ConsecutivePartition>,
    probs: Vec<f64>,
    index: HashMap<Vec<u64>, usize>,
}

impl PartitionDistribution {
    fn from_probs(states: Vec<ConsecutivePartition>, probs: Vec<f64>) -> Self {
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.finite_sizes().to_vec(), i))
            .collect();
        PartitionDistribution { states, probs, index }
    }

    pub fn states(&self) -> &[ConsecutivePartition] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, p: &ConsecutivePartition) -> Option<usize> {
        if p.has_infinite_block() {
            return None;
        }
        self.index.get(p.finite_sizes()).copied()
    }
}

/// Builds the generator over `states` from per-block-count rate vectors.
fn generator_from_vectors(
    states: &[ConsecutivePartition],
    index: &HashMap<Vec<u64>, usize>,
    vectors: &[Option<(Vec<f64>, Vec<f64>)>],
) -> Result<Matrix> {
    let dim = states.len();
    let mut q = Matrix::zeros(dim);
    for (i, state) in states.iter().enumerate() {
        let m = state.num_blocks();
        if m < 2 {
            continue;
        }
        let (r, tb) = vectors[m].as_ref().unwrap();
        let mut push = |event: MergeEvent, rate: f64| -> Result<()> {
            if rate == 0.0 {
                return Ok(());
            }
            let target = partition::apply_merge(state, event)?;
            let ti = index
                .get(target.finite_sizes())
                .copied()
                .ok_or_else(|| Error::inconsistency(format!("merge target {target} is unindexed")))?;
            q.set(i, ti, q.get(i, ti) + rate);
            q.set(i, i, q.get(i, i) - rate);
            Ok(())
        };
        for j in 1..m {
            for k in 2..=(m - j) {
                push(MergeEvent { j, k, boundary: false }, r[k - 2])?;
            }
            push(MergeEvent { j, k: 0, boundary: true }, tb[m - j - 1])?;
        }
    }
    Ok(q)
}

fn singleton_index(states: &[ConsecutivePartition], n: usize) -> Result<usize> {
    let key = vec![1u64; n];
    states
        .iter()
        .position(|s| s.finite_sizes() == key.as_slice())
        .ok_or_else(|| Error::inconsistency("singleton state missing from enumeration".to_string()))
}

/// Exact time-`t` law of the homogeneous coalescent started from `n`
/// singletons, over all compositions of `n`. Kept to `n <= 8` (128 states).
pub fn ctmc_oracle(mu: &ReproductionMeasure, n: usize, t: f64) -> Result<PartitionDistribution> {
    if n == 0 || n > 8 {
        return Err(Error::domain(format!("the dense oracle covers n in 1..=8, got {n}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    mu.check_supports(n)?;
    let states = enumerate_compositions(n)?;
    let index: HashMap<Vec<u64>, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.finite_sizes().to_vec(), i))
        .collect();
    let mut vectors: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; n + 1];
    for m in 2..=n {
        vectors[m] = Some(mu.rate_vectors(m));
    }
    let q = generator_from_vectors(&states, &index, &vectors)?;
    let e = expm(&q.scale(t))?;
    let i0 = singleton_index(&states, n)?;
    let dim = states.len();
    let probs = e.a[i0 * dim..(i0 + 1) * dim]
        .iter()
        .map(|&p| p.max(0.0))
        .collect();
    Ok(PartitionDistribution::from_probs(states, probs))
}

/// Midpoint step sizes for the time-dependent oracle; the coarse and fine
/// runs must agree or the result is rejected.
const ORACLE_H: f64 = 5e-4;
const ORACLE_GATE: f64 = 1e-4;

/// `p <- p exp(Q h)` by the plain series; `Q h` is split until its norm is
/// small enough for fast termination.
fn advance_row(p: &mut Vec<f64>, q: &Matrix, h: f64) -> Result<()> {
    let norm = q.norm_1() * h;
    let substeps = (norm / 0.5).ceil().max(1.0) as usize;
    let hs = h / substeps as f64;
    for _ in 0..substeps {
        let mut out = p.clone();
        let mut term = p.clone();
        let mut converged = false;
        for j in 1..=80 {
            term = q.row_apply(&term);
            let scale = hs / j as f64;
            let mut mx = 0.0f64;
            for (o, x) in out.iter_mut().zip(term.iter_mut()) {
                *x *= scale;
                *o += *x;
                mx = mx.max(x.abs());
            }
            if mx < 1e-17 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerics("row exponential series did not converge".to_string()));
        }
        *p = out;
    }
    Ok(())
}

/// Exact law of the embedded coalescent over `[t0, t1]`, by midpoint-frozen
/// generators on a fine grid, accepted only when halving the step leaves the
/// answer unchanged at the oracle tolerance.
pub fn ctmc_oracle_inhomogeneous(
    sched: &RateSchedule,
    n: usize,
    t0: f64,
    t1: f64,
) -> Result<PartitionDistribution> {
    if n == 0 || n > 8 {
        return Err(Error::domain(format!("the dense oracle covers n in 1..=8, got {n}")));
    }
    if !t0.is_finite() || !t1.is_finite() || !(t1 >= t0) {
        return Err(Error::domain(format!("bad time window [{t0}, {t1}]")));
    }
    if sched.lam().is_infinite() && !(t0 > 0.0) {
        return Err(Error::domain("an entrance schedule starts strictly after zero".to_string()));
    }
    if (sched.cap() as usize) < n.saturating_sub(1) {
        return Err(Error::domain(format!("schedule cap {} cannot drive {n} blocks", sched.cap())));
    }
    let states = enumerate_compositions(n)?;
    let index: HashMap<Vec<u64>, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.finite_sizes().to_vec(), i))
        .collect();
    let i0 = singleton_index(&states, n)?;
    let propagate = |h: f64| -> Result<Vec<f64>> {
        let mut p = vec![0.0; states.len()];
        p[i0] = 1.0;
        if t1 == t0 {
            return Ok(p);
        }
        let steps = ((t1 - t0) / h).ceil().max(1.0) as usize;
        let hh = (t1 - t0) / steps as f64;
        for s in 0..steps {
            let tm = t0 + (s as f64 + 0.5) * hh;
            let mut vectors: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; n + 1];
            for m in 2..=n {
                vectors[m] = Some(sched.rate_vectors(tm, m)?);
            }
            let q = generator_from_vectors(&states, &index, &vectors)?;
            advance_row(&mut p, &q, hh)?;
        }
        Ok(p)
    };
    let coarse = propagate(ORACLE_H)?;
    let fine = propagate(0.5 * ORACLE_H)?;
    let mut gap = 0.0f64;
    for (a, b) in coarse.iter().zip(&fine) {
        gap = gap.max((a - b).abs());
    }
    if gap > ORACLE_GATE {
        return Err(Error::numerics(format!(
            "step halving moved the time-dependent oracle by {gap}, over the {ORACLE_GATE} gate"
        )));
    }
    let probs = fine.into_iter().map(|p| p.max(0.0)).collect();
    Ok(PartitionDistribution::from_probs(states, probs))
}

// ---------------------------------------------------------------------------
// Block-count chain

/// Exact pmf of the block count at time `t` started from `n` blocks:
/// `out[l - 1] = P(l blocks)`. The count drops `l -> l - k + 1` at rate
/// `(l - k) mass(k) + tail(k)`, one absorbing state at one block.
pub fn block_count_pmf(mu: &ReproductionMeasure, n: usize, t: f64) -> Result<Vec<f64>> {
    if n == 0 || n > 512 {
        return Err(Error::domain(format!("the dense block-count chain covers 1..=512, got {n}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    mu.check_supports(n)?;
    let mut q = Matrix::zeros(n);
    for l in 2..=n {
        for k in 2..=l {
            let mut rate = mu.tail(k as u64);
            if k < l {
                rate += (l - k) as f64 * mu.mass(k as u64);
            }
            let (row, col) = (l - 1, l - k);
            q.set(row, col, q.get(row, col) + rate);
            q.set(row, row, q.get(row, row) - rate);
        }
    }
    let e = expm(&q.scale(t))?;
    Ok(e.a[(n - 1) * n..n * n].iter().map(|&p| p.max(0.0)).collect())
}

/// One draw of the block count at time `t` started from `n` blocks, by
/// Gillespie on the count alone; prefix sums keep each step O(1) in `n`
/// until the selection scan, which exits early for light tails.
pub fn sample_block_count(
    mu: &ReproductionMeasure,
    n: usize,
    t: f64,
    rng: &mut impl Rng,
) -> Result<usize> {
    if n == 0 {
        return Err(Error::domain("need at least one starting block".to_string()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    mu.check_supports(n)?;
    // cum_*[i] aggregates sizes 2..=i+2; tails run one entry further.
    let mut cum_m = Vec::with_capacity(mu.mass.len());
    let mut cum_km = Vec::with_capacity(mu.mass.len());
    let (mut a, mut b) = (0.0, 0.0);
    for (i, &x) in mu.mass.iter().enumerate() {
        a += x;
        b += (i + 2) as f64 * x;
        cum_m.push(a);
        cum_km.push(b);
    }
    let mut cum_t = Vec::with_capacity(mu.tail.len());
    let mut c = 0.0;
    for &x in &mu.tail {
        c += x;
        cum_t.push(c);
    }
    let mut l = n;
    let mut time = 0.0;
    while l > 1 {
        let (m1, km) = if l >= 3 { (cum_m[l - 3], cum_km[l - 3]) } else { (0.0, 0.0) };
        let total = l as f64 * m1 - km + cum_t[l - 2];
        if !(total > 0.0) {
            break;
        }
        time += sample_exp(total, rng)?;
        if time >= t {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = l;
        for k in 2..=l {
            let mut rate = mu.tail(k as u64);
            if k < l {
                rate += (l - k) as f64 * mu.mass(k as u64);
            }
            if target < rate {
                chosen = k;
                break;
            }
            target -= rate;
        }
        l = l - chosen + 1;
    }
    Ok(l)
}

// ---------------------------------------------------------------------------
// Closed-form marginals

/// `E[z^{#C_i(t)}]` for one block of the coalescent sampled at intensity
/// `lam`: `1 - v_t(lam (1 - z)) / v_t(lam)`. An infinite `lam` delegates to
/// the window form started at `DEFAULT_INF_START`.
pub fn marginal_block_gf(mech: &BranchingMechanism, lam: f64, t: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!("z must lie in [0, 1], got {z}")));
    }
    if lam.is_infinite() && lam > 0.0 {
        if !(t > DEFAULT_INF_START) {
            return Err(Error::domain(format!(
                "the entrance marginal needs t > {DEFAULT_INF_START}"
            )));
        }
        return marginal_block_gf_from(mech, DEFAULT_INF_START, t, z);
    }
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::domain(format!("lam must be > 0, got {lam}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    if z == 1.0 && t == 0.0 {
        return Ok(1.0);
    }
    let denom = mechanism::v(mech, t, lam)?;
    let num = if z == 1.0 {
        mechanism::v_zero(mech, t)?
    } else {
        mechanism::v(mech, t, lam * (1.0 - z))?
    };
    Ok(1.0 - num / denom)
}

/// `E[z^{#C_i(s, t)}]` for one block of the two-time window partition on the
/// entrance schedule: `1 - v_{t-s}(v_s(inf)(1 - z)) / v_t(inf)`.
pub fn marginal_block_gf_from(mech: &BranchingMechanism, s: f64, t: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!("z must lie in [0, 1], got {z}")));
    }
    if !(s > 0.0) || !(t >= s) || !t.is_finite() {
        return Err(Error::domain(format!("need 0 < s <= t, got s = {s}, t = {t}")));
    }
    if !mechanism::grey(mech)?.extinction {
        return Err(Error::domain(
            "the entrance marginal needs a finite extinction integral".to_string(),
        ));
    }
    if z == 1.0 && t == s {
        return Ok(1.0);
    }
    let denom = mechanism::v_inf(mech, t)?;
    let vs = mechanism::v_inf(mech, s)?;
    let num = if z == 1.0 {
        mechanism::v_zero(mech, t - s)?
    } else {
        mechanism::v(mech, t - s, vs * (1.0 - z))?
    };
    Ok(1.0 - num / denom)
}

/// `E[z^{#C_i}]` for one block of the terminal partition of a subcritical
/// coalescent sampled at intensity `lam`:
/// `1 - exp(-Psi'(0) int_{lam(1-z)}^{lam} du / Psi(u))`.
pub fn limit_partition_gf(mech: &BranchingMechanism, lam: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!("z must lie in [0, 1], got {z}")));
    }
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::domain(format!("lam must be > 0, got {lam}")));
    }
    if mechanism::classify(mech)?.kind != CriticalityKind::Subcritical {
        return Err(Error::domain("the terminal partition law needs a subcritical mechanism".to_string()));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return Ok(1.0);
    }
    let slope = mechanism::psi_prime_at_zero(mech)?;
    let integral = quad::integrate(
        &|u| 1.0 / mechanism::psi_eval(mech, u).unwrap_or(f64::NAN),
        lam * (1.0 - z),
        lam,
        1e-10,
        1e-14,
    )?;
    Ok(1.0 - (-slope * integral).exp())
}

/// The asymptotic fraction of singleton blocks at time `t` under sampling
/// intensity `lam`: `(lam / Psi(lam)) (Psi(v_t(lam)) / v_t(lam))`.
pub fn singleton_fraction(mech: &BranchingMechanism, lam: f64, t: f64) -> Result<f64> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::domain(format!("lam must be > 0, got {lam}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    let psi_lam = mechanism::psi_eval(mech, lam)?;
    if psi_lam == 0.0 {
        return Err(Error::domain(format!(
            "lam = {lam} is a zero of the mechanism; the singleton fraction degenerates there"
        )));
    }
    let v = mechanism::v(mech, t, lam)?;
    let out = lam / psi_lam * (mechanism::psi_eval(mech, v)? / v);
    if !out.is_finite() {
        return Err(Error::numerics(format!("singleton fraction overflowed at t = {t}")));
    }
    Ok(out)
}

/// Success parameter of the geometric law of the number of blocks when the
/// flow explodes: `#C(t)` under intensity `lam` is geometric on `1, 2, ..`
/// with parameter `v_t(0) / v_t(lam)`.
pub fn blocks_geometric_param(mech: &BranchingMechanism, lam: f64, t: f64) -> Result<f64> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::domain(format!("lam must be > 0, got {lam}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and > 0, got {t}")));
    }
    if !mechanism::grey(mech)?.explosion {
        return Err(Error::domain(
            "a geometric block count needs an explosive mechanism".to_string(),
        ));
    }
    Ok(mechanism::v_zero(mech, t)? / mechanism::v(mech, t, lam)?)
}

/// `E[z^{#tree(t)}]` for the reduced tree of the population conditioned to
/// survive to `horizon`, seen at `t`:
/// `1 - v_t(v_{horizon - t}(inf)(1 - z)) / v_horizon(inf)`.
pub fn reduced_tree_gf(mech: &BranchingMechanism, horizon: f64, t: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!("z must lie in [0, 1], got {z}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() || !(0.0..horizon).contains(&t) {
        return Err(Error::domain(format!("need 0 <= t < horizon, got t = {t}, horizon = {horizon}")));
    }
    if !mechanism::grey(mech)?.extinction {
        return Err(Error::domain("the reduced tree needs a finite extinction integral".to_string()));
    }
    if z == 1.0 && t == 0.0 {
        return Ok(1.0);
    }
    let denom = mechanism::v_inf(mech, horizon)?;
    let entry = mechanism::v_inf(mech, horizon - t)?;
    let num = if z == 1.0 {
        mechanism::v_zero(mech, t)?
    } else {
        mechanism::v(mech, t, entry * (1.0 - z))?
    };
    Ok(1.0 - num / denom)
}

/// Probability that the reduced tree to `horizon` has not branched by `t`:
/// `(Psi(v_horizon(inf)) / v_horizon(inf)) (v_{horizon-t}(inf) / Psi(v_{horizon-t}(inf)))`.
pub fn reduced_tree_first_jump_survival(mech: &BranchingMechanism, horizon: f64, t: f64) -> Result<f64> {
    if !(horizon > 0.0) || !horizon.is_finite() || !(0.0..horizon).contains(&t) {
        return Err(Error::domain(format!("need 0 <= t < horizon, got t = {t}, horizon = {horizon}")));
    }
    if !mechanism::grey(mech)?.extinction {
        return Err(Error::domain("the reduced tree needs a finite extinction integral".to_string()));
    }
    let v_end = mechanism::v_inf(mech, horizon)?;
    let v_rem = mechanism::v_inf(mech, horizon - t)?;
    Ok(mechanism::psi_eval(mech, v_end)? / v_end * (v_rem / mechanism::psi_eval(mech, v_rem)?))
}

// ---------------------------------------------------------------------------
// Interval genealogy of the diffusion flow

/// One transition between consecutive layers of an interval genealogy.
#[derive(Debug, Clone, PartialEq)]
pub struct GenealogyStep {
    /// Jump sizes of the fresh path over the step, leftmost first.
    pub atom_lengths: Vec<f64>,
    /// How many consecutive atoms fell into each surviving family.
    pub atom_counts: Vec<u64>,
    /// Index of each surviving family in the previous layer, strictly
    /// increasing; families without atoms die.
    pub survivors: Vec<usize>,
}

impl GenealogyStep {
    /// The step's merge pattern over its atoms; defined when atoms exist.
    pub fn grouping(&self) -> Result<ConsecutivePartition> {
        ConsecutivePartition::from_sizes(self.atom_counts.clone())
    }
}

/// Interval partitions of the current population of the diffusion flow by
/// time-zero ancestor, refined through a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGenealogy {
    pub times: Vec<f64>,
    /// Family interval lengths at each time, leftmost first.
    pub lengths: Vec<Vec<f64>>,
    /// Step `i` joins layer `i` to layer `i + 1`.
    pub steps: Vec<GenealogyStep>,
}

/// Builds an interval genealogy of the diffusion flow over initial mass
/// `x_max` by composing fresh increments: each step samples the flow over
/// the elapsed duration on the current total mass and groups its jumps by
/// the family intervals they land in. Family lengths at the first grid time
/// are the jump sizes of the flow there; each later layer's lengths are the
/// per-family sums of the fresh jumps.
pub fn interval_genealogy(
    mech: &BranchingMechanism,
    t_grid: &[f64],
    x_max: f64,
    rng: &mut impl Rng,
) -> Result<IntervalGenealogy> {
    if !matches!(mech.levy, LevyFamily::None) {
        return Err(Error::domain(
            "pathwise interval genealogies are implemented for the diffusion family only".to_string(),
        ));
    }
    if t_grid.is_empty() {
        return Err(Error::domain("the time grid must be nonempty".to_string()));
    }
    if !(t_grid[0] > 0.0) || t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("the time grid must be finite, strictly increasing, and start after zero".to_string()));
    }
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::domain(format!("x_max must be finite and > 0, got {x_max}")));
    }
    let first = flow::sample_feller_forward(mech.sigma2, mech.beta, t_grid[0], x_max, rng)?;
    let mut lengths: Vec<Vec<f64>> = vec![first.jumps().iter().map(|&(_, s)| s).collect()];
    let mut steps = Vec::with_capacity(t_grid.len() - 1);
    for w in t_grid.windows(2) {
        let cur = lengths.last().unwrap();
        let horizon: f64 = cur.iter().sum();
        let path = flow::sample_feller_forward(mech.sigma2, mech.beta, w[1] - w[0], horizon, rng)?;
        let mut bounds = Vec::with_capacity(cur.len());
        let mut acc = 0.0;
        for &len in cur {
            acc += len;
            bounds.push(acc);
        }
        let mut atom_lengths = Vec::with_capacity(path.jumps().len());
        let mut atom_counts: Vec<u64> = Vec::new();
        let mut survivors: Vec<usize> = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        let mut tile = 0usize;
        for &(loc, size) in path.jumps() {
            // Tiles are (bounds[j-1], bounds[j]]; locations never pass the
            // last bound because the horizon is the same left-fold sum.
            while tile + 1 < bounds.len() && loc > bounds[tile] {
                tile += 1;
            }
            if survivors.last() != Some(&tile) {
                survivors.push(tile);
                atom_counts.push(0);
                sums.push(0.0);
            }
            *atom_counts.last_mut().unwrap() += 1;
            *sums.last_mut().unwrap() += size;
            atom_lengths.push(size);
        }
        lengths.push(sums);
        steps.push(GenealogyStep { atom_lengths, atom_counts, survivors });
    }
    Ok(IntervalGenealogy { times: t_grid.to_vec(), lengths, steps })
}
