//! Perishable-inventory instance generator.
//!
//! States are inventory levels in batch units up to a capacity; actions
//! dispatch vehicles that each collect a fixed number of packs. Demand and
//! supply are truncated Poisson in batch units, newly arrived batches expire
//! as a whole with an Erlang-derived probability, and costs combine holding,
//! expected disposal (expiration plus over-capacity), expected shortage and
//! per-action procurement. Scenarios draw the demand rate, supply rate and
//! shelf life from configured ranges.

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ScenarioParams, UncertainMdp};
use crate::scalar::Scalar;

/// Generator configuration. Units: capacities and packs in item units,
/// rates in packs per period before batch scaling, costs per batch unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InventoryConfig {
    /// Inventory capacity in item units (`K`); must divide by `batch_size`.
    pub capacity_units: u32,
    /// Items per state step; the state space is `0..=capacity/batch`.
    pub batch_size: u32,
    /// Maximum number of vehicles; actions are `0..=n_vehicles`.
    pub n_vehicles: u32,
    /// Packs collected per dispatched vehicle; must divide by `batch_size`.
    pub packs_per_vehicle: u32,
    /// Holding cost per batch unit of inventory per period.
    pub unit_holding: f64,
    /// Disposal cost per batch unit.
    pub unit_disposal: f64,
    /// Shortage cost per batch unit of unmet demand.
    pub unit_shortage: f64,
    /// Procurement cost per action. Empty means the documented placeholder
    /// of 10 per vehicle; otherwise must have `n_vehicles + 1` entries.
    pub action_costs: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
    /// Two-sided truncation budget for the Poisson supports.
    pub tail_eps: f64,
    /// Demand rate range in packs per period, sampled uniformly.
    pub demand_rate_range: (f64, f64),
    /// Supply rate range in packs per period, sampled uniformly.
    pub supply_rate_range: (f64, f64),
    /// Shelf life range in periods, sampled uniformly over the integers.
    pub shelf_life_range: (u32, u32),
    pub n_scenarios: usize,
    pub rng_seed: u64,
    /// Multiplier applied to every cost entry; the default reports costs in
    /// thousands.
    pub cost_scale: f64,
}

impl Default for InventoryConfig {
    fn default() -> Self {
        Self {
            capacity_units: 50,
            batch_size: 10,
            n_vehicles: 4,
            packs_per_vehicle: 20,
            unit_holding: 1.0,
            unit_disposal: 5.0,
            unit_shortage: 50.0,
            action_costs: Vec::new(),
            gamma: 0.99,
            alpha: 0.9,
            tail_eps: 1e-4,
            demand_rate_range: (30.0, 130.0),
            supply_rate_range: (20.0, 80.0),
            shelf_life_range: (1, 6),
            n_scenarios: 5,
            rng_seed: 0,
            cost_scale: 1e-3,
        }
    }
}

impl InventoryConfig {
    /// Number of states: inventory levels `0..=capacity` in batch units.
    pub fn n_states(&self) -> usize {
        (self.capacity_units / self.batch_size) as usize + 1
    }

    /// Number of actions: `0..=n_vehicles` dispatched vehicles.
    pub fn n_actions(&self) -> usize {
        self.n_vehicles as usize + 1
    }

    /// Batch units added by action `a`.
    pub fn batches_for_action(&self, a: usize) -> usize {
        a * (self.packs_per_vehicle / self.batch_size) as usize
    }

    /// Procurement cost of action `a` (placeholder of 10 per vehicle when
    /// no explicit costs are configured).
    pub fn procurement_cost(&self, a: usize) -> f64 {
        if self.action_costs.is_empty() {
            10.0 * a as f64
        } else {
            self.action_costs[a]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInventoryConfig(msg));
        if self.batch_size == 0 || !self.capacity_units.is_multiple_of(self.batch_size) {
            return fail(format!(
                "capacity {} must be a positive multiple of batch size {}",
                self.capacity_units, self.batch_size
            ));
        }
        if !self.packs_per_vehicle.is_multiple_of(self.batch_size) {
            return fail(format!(
                "packs per vehicle {} must be a multiple of batch size {}",
                self.packs_per_vehicle, self.batch_size
            ));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps <= 0.1) {
            return fail(format!("tail_eps {} must lie in (0, 0.1]", self.tail_eps));
        }
        if self.tail_eps < 1e-13 {
            return fail(format!(
                "tail_eps {} is below 1e-13; the truncation search would drown in rounding",
                self.tail_eps
            ));
        }
        if self.unit_holding < 0.0
            || self.unit_disposal < 0.0
            || self.unit_shortage < 0.0
            || self.cost_scale < 0.0
        {
            return fail("cost rates must be nonnegative".into());
        }
        if !self.action_costs.is_empty() {
            if self.action_costs.len() != self.n_actions() {
                return fail(format!(
                    "action_costs has {} entries, expected {}",
                    self.action_costs.len(),
                    self.n_actions()
                ));
            }
            if self.action_costs.iter().any(|c| *c < 0.0 || !c.is_finite()) {
                return fail("action_costs must be finite and nonnegative".into());
            }
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::GammaOutOfRange(self.gamma));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        let (dlo, dhi) = self.demand_rate_range;
        let (slo, shi) = self.supply_rate_range;
        if !(dlo > 0.0 && dlo <= dhi && slo > 0.0 && slo <= shi) {
            return fail("rate ranges must be positive and ordered".into());
        }
        if self.shelf_life_range.0 == 0 || self.shelf_life_range.0 > self.shelf_life_range.1 {
            return fail("shelf life range must be ordered and start at 1 or more".into());
        }
        if self.n_scenarios == 0 {
            return fail("need at least one scenario".into());
        }
        Ok(())
    }
}

/// One scenario's parameters: rates in batch units, shelf life in periods,
/// and the truncated support of the supply-demand difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryScenario {
    /// Demand rate in batch units per period.
    pub mu_d: f64,
    /// Supply rate in batch units per period.
    pub mu_u: f64,
    /// Shelf life of arriving batches, in periods.
    pub t_e: u32,
    /// Negative of the largest demand kept by the truncation (so `<= 0`).
    pub delta_min: i64,
    /// Largest supply kept by the truncation (`>= 0`).
    pub delta_max: i64,
}

impl InventoryScenario {
    /// Derive the truncated supports: each Poisson tail beyond the cut
    /// holds at most `tail_eps / 2` probability.
    pub fn new(mu_d: f64, mu_u: f64, t_e: u32, tail_eps: f64) -> Result<Self> {
        if !(mu_d > 0.0 && mu_u > 0.0) {
            return Err(Error::InvalidInventoryConfig(format!(
                "rates must be positive, got demand {mu_d} supply {mu_u}"
            )));
        }
        let d_max = poisson_upper_cut(mu_d, tail_eps / 2.0);
        let u_max = poisson_upper_cut(mu_u, tail_eps / 2.0);
        if d_max == 0 && u_max == 0 {
            return Err(Error::DegenerateTruncation);
        }
        Ok(Self { mu_d, mu_u, t_e, delta_min: -(d_max as i64), delta_max: u_max as i64 })
    }
}

/// Poisson pmf table `P(X = 0..=kmax)` for rate `mu`.
fn poisson_pmf_table(mu: f64, kmax: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(kmax + 1);
    let mut p = (-mu).exp();
    table.push(p);
    for k in 1..=kmax {
        p *= mu / k as f64;
        table.push(p);
    }
    table
}

/// `P(X <= k)` for `X ~ Poisson(mu)`; zero for negative `k`.
fn poisson_cdf(mu: f64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let mut p = (-mu).exp();
    let mut cum = p;
    for t in 1..=k {
        p *= mu / t as f64;
        cum += p;
    }
    cum.min(1.0)
}

/// Smallest `k` with `P(X > k) <= tail`.
fn poisson_upper_cut(mu: f64, tail: f64) -> usize {
    let mut p = (-mu).exp();
    let mut cum = p;
    let mut k = 0usize;
    while 1.0 - cum > tail {
        k += 1;
        p *= mu / k as f64;
        cum += p;
        if k > 100_000 {
            break;
        }
    }
    k
}

/// Probability that a batch of `k` arriving items cannot be consumed before
/// its shelf life ends: `P(N(t_e mu_d) <= k - 1)`. Zero for `k = 0`.
pub fn erlang_expire(scn: &InventoryScenario, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    poisson_cdf(scn.t_e as f64 * scn.mu_d, k as i64 - 1)
}

/// Truncated pmf tables sized for all convolution sums of one scenario.
struct Pmfs {
    f_d: Vec<f64>,
    f_u: Vec<f64>,
}

impl Pmfs {
    fn new(scn: &InventoryScenario) -> Self {
        let d_max = (-scn.delta_min) as usize;
        let u_reach = d_max + scn.delta_max as usize;
        Pmfs {
            f_d: poisson_pmf_table(scn.mu_d, d_max),
            f_u: poisson_pmf_table(scn.mu_u, u_reach),
        }
    }

    /// `sum_D f_d(D) f_u(D + delta)` over the truncated demand support.
    fn conv(&self, delta: i64) -> f64 {
        let mut acc = 0.0;
        for (d, &fd) in self.f_d.iter().enumerate() {
            let u = d as i64 + delta;
            if u >= 0 {
                if let Some(&fu) = self.f_u.get(u as usize) {
                    acc += fd * fu;
                }
            }
        }
        acc
    }
}

/// Net-change kernel row before expiration handling, on the uncapped level
/// line `0..=start + delta_max`, with shortage absorbed at level zero.
fn uncapped_row(pmfs: &Pmfs, scn: &InventoryScenario, start: usize) -> Vec<f64> {
    let top = start + scn.delta_max as usize;
    let mut row = vec![0.0; top + 1];
    // Absorb every net drop at or below zero.
    let mut mass0 = 0.0;
    let mut delta = scn.delta_min;
    while delta <= -(start as i64) {
        mass0 += pmfs.conv(delta);
        delta += 1;
    }
    row[0] = mass0;
    for (level, slot) in row.iter_mut().enumerate().skip(1) {
        *slot = pmfs.conv(level as i64 - start as i64);
    }
    row
}

/// Base transition kernel over inventory levels, ignoring actions and
/// expiration: absorb at zero, absorb at capacity, single convolution term
/// in between. Rows are renormalized to sum exactly to one.
pub fn base_transition(scn: &InventoryScenario, cfg: &InventoryConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let n = cfg.n_states();
    let cap = n - 1;
    let pmfs = Pmfs::new(scn);
    let mut kernel = Array2::zeros((n, n));
    for i in 0..n {
        let uncapped = uncapped_row(&pmfs, scn, i);
        for j in 0..n {
            kernel[(i, j)] = if j == cap {
                uncapped.iter().skip(cap).sum()
            } else {
                uncapped.get(j).copied().unwrap_or(0.0)
            };
        }
        normalize_row(&mut kernel, i)?;
    }
    Ok(kernel)
}

fn normalize_row(kernel: &mut Array2<f64>, i: usize) -> Result<()> {
    let sum: f64 = kernel.row(i).sum();
    if !(sum > 0.0) {
        return Err(Error::NonFinite(format!("transition row {i} has no mass")));
    }
    for v in kernel.row_mut(i) {
        *v /= sum;
    }
    Ok(())
}

/// Transition kernel under action `a`: shift the start level by the
/// procured batches, fold the expired-batch mass back onto the start level,
/// then absorb at capacity and renormalize.
///
/// The fold happens on the uncapped level line, before the capacity
/// absorption, so expiration probabilities apply to the physical level an
/// arrival would reach rather than to the capped state.
pub fn action_transition(
    scn: &InventoryScenario,
    cfg: &InventoryConfig,
    a: usize,
) -> Result<Array2<f64>> {
    cfg.validate()?;
    if a >= cfg.n_actions() {
        return Err(Error::InvalidInventoryConfig(format!(
            "action {a} out of range 0..{}",
            cfg.n_actions()
        )));
    }
    let n = cfg.n_states();
    let cap = n - 1;
    let n_a = cfg.batches_for_action(a);
    let pmfs = Pmfs::new(scn);
    let mut kernel = Array2::zeros((n, n));

    for i in 0..n {
        let start = i + n_a;
        let mut levels = uncapped_row(&pmfs, scn, start);
        // Expired batches revert the level to the post-procurement start.
        let mut expired = 0.0;
        for (level, slot) in levels.iter_mut().enumerate().skip(start + 1) {
            let f_e = erlang_expire(scn, level);
            expired += f_e * *slot;
            *slot *= 1.0 - f_e;
        }
        if start < levels.len() {
            levels[start] += expired;
        } else {
            // The start level itself is beyond the line top; cannot happen
            // since the line extends to start + delta_max >= start.
            unreachable!("uncapped line always covers the start level");
        }
        for j in 0..n {
            kernel[(i, j)] = if j == cap {
                levels.iter().skip(cap).sum()
            } else {
                levels.get(j).copied().unwrap_or(0.0)
            };
        }
        normalize_row(&mut kernel, i)?;
    }
    Ok(kernel)
}

/// Expected one-period cost of taking action `a` at inventory level `i`:
/// holding plus expected disposal (expired batches and over-capacity
/// arrivals) plus expected shortage plus procurement, all scaled by the
/// configured cost scale.
pub fn action_cost(
    scn: &InventoryScenario,
    cfg: &InventoryConfig,
    i: usize,
    a: usize,
) -> Result<f64> {
    cfg.validate()?;
    let cap = cfg.n_states() - 1;
    let n_a = cfg.batches_for_action(a);
    let start = i + n_a;
    let pmfs = Pmfs::new(scn);

    // Expired surplus: net gains that survive within capacity but expire.
    let mut disposal = 0.0;
    if cap > start {
        let top = (cap - start).min(scn.delta_max.max(0) as usize);
        for delta in 1..=top {
            disposal += erlang_expire(scn, start + delta)
                * pmfs.conv(delta as i64)
                * delta as f64
                * cfg.unit_disposal;
        }
    }
    // Arrivals beyond capacity are disposed of immediately.
    let overflow_top = cap + n_a + scn.delta_max.max(0) as usize;
    for level in cap..=overflow_top {
        let delta = level as i64 - start as i64;
        disposal +=
            pmfs.conv(delta) * (level - cap) as f64 * cfg.unit_disposal;
    }

    // Unmet demand below level zero.
    let mut shortage = 0.0;
    let mut level = start as i64 + scn.delta_min;
    while level <= -1 {
        shortage += pmfs.conv(level - start as i64) * (-level) as f64 * cfg.unit_shortage;
        level += 1;
    }

    let holding = cfg.unit_holding * i as f64;
    let total = holding + disposal + shortage + cfg.procurement_cost(a);
    Ok(total * cfg.cost_scale)
}

/// Build the full model from explicit scenario parameters, equiprobable
/// scenarios and a uniform initial distribution.
pub fn instance_from_scenarios<T: Scalar>(
    cfg: &InventoryConfig,
    scenarios: &[InventoryScenario],
) -> Result<UncertainMdp<T>> {
    cfg.validate()?;
    if scenarios.is_empty() {
        return Err(Error::InvalidInventoryConfig("no scenarios given".into()));
    }
    let n = cfg.n_states();
    let n_actions = cfg.n_actions();
    let mut params = Vec::with_capacity(scenarios.len());
    for scn in scenarios {
        let mut cost = Array2::zeros((n, n_actions));
        let mut trans = Array3::zeros((n, n_actions, n));
        for a in 0..n_actions {
            let kernel = action_transition(scn, cfg, a)?;
            for i in 0..n {
                cost[(i, a)] = T::of(action_cost(scn, cfg, i, a)?);
                for j in 0..n {
                    trans[(i, a, j)] = T::of(kernel[(i, j)]);
                }
            }
        }
        params.push(ScenarioParams { cost, trans });
    }
    let q = vec![T::of(1.0 / n as f64); n];
    let probs = vec![T::of(1.0 / scenarios.len() as f64); scenarios.len()];
    UncertainMdp::new(T::of(cfg.gamma), q, params, probs)
}

/// Sample scenario parameters and build the model. Deterministic for a
/// fixed seed: rates are continuous uniform over the configured pack
/// ranges (converted to batch units), shelf life discrete uniform.
pub fn generate_instance<T: Scalar>(cfg: &InventoryConfig) -> Result<UncertainMdp<T>> {
    cfg.validate()?;
    let scenarios = sample_scenarios(cfg)?;
    instance_from_scenarios(cfg, &scenarios)
}

/// The sampling half of [`generate_instance`], exposed for inspection.
pub fn sample_scenarios(cfg: &InventoryConfig) -> Result<Vec<InventoryScenario>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let batch = cfg.batch_size as f64;
    let mut scenarios = Vec::with_capacity(cfg.n_scenarios);
    for _ in 0..cfg.n_scenarios {
        let mu_d = rng.random_range(cfg.demand_rate_range.0..=cfg.demand_rate_range.1) / batch;
        let mu_u = rng.random_range(cfg.supply_rate_range.0..=cfg.supply_rate_range.1) / batch;
        let t_e = rng.random_range(cfg.shelf_life_range.0..=cfg.shelf_life_range.1);
        scenarios.push(InventoryScenario::new(mu_d, mu_u, t_e, cfg.tail_eps)?);
    }
    Ok(scenarios)
}

/// Parse a scenario table: a CSV with header
/// `scenario,demand_rate,supply_rate,shelf_life`, rates in batch units.
pub fn parse_scenario_table(text: &str, tail_eps: f64) -> Result<Vec<InventoryScenario>> {
    let mut scenarios = Vec::new();
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((n, line)) => break (n, line),
            None => {
                return Err(Error::ScenarioTable { line: 0, message: "empty table".into() })
            }
        }
    };
    let expected = "scenario,demand_rate,supply_rate,shelf_life";
    if header.1.trim().replace(' ', "") != expected {
        return Err(Error::ScenarioTable {
            line: header.0 + 1,
            message: format!("expected header `{expected}`, got `{}`", header.1.trim()),
        });
    }
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::ScenarioTable {
                line: n + 1,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::ScenarioTable {
                line: n + 1,
                message: format!("cannot parse {what} `{s}`"),
            })
        };
        let mu_d = parse_f(fields[1], "demand rate")?;
        let mu_u = parse_f(fields[2], "supply rate")?;
        let t_e: u32 = fields[3].parse().map_err(|_| Error::ScenarioTable {
            line: n + 1,
            message: format!("cannot parse shelf life `{}`", fields[3]),
        })?;
        scenarios.push(InventoryScenario::new(mu_d, mu_u, t_e, tail_eps)?);
    }
    if scenarios.is_empty() {
        return Err(Error::ScenarioTable { line: 0, message: "table has no data rows".into() });
    }
    Ok(scenarios)
}
