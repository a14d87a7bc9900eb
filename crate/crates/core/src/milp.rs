//! Mixed-integer model export in the CPLEX LP text format.
//!
//! Builds the deterministic-policy quantile model (big-M or McCormick
//! linearization), its randomized-policy McCormick relaxation, and the
//! monotone-restricted variant, as plain data first and as a deterministic
//! text rendering second. Solving the files is left to external solvers;
//! this module only guarantees that the emitted rows are exactly the cited
//! constraint systems with either tightened (cached) or naive coefficients.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mdp::UncertainMdp;
use crate::preprocess::{BoundsCache, ZFix};
use crate::quantile::check_alpha;
use crate::scalar::Scalar;

/// Big-M value used when no bounds cache is supplied.
pub const NAIVE_BIG_M: f64 = 1e6;

/// Which formulation to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Deterministic policies, Bellman rows linearized with per-row big-M.
    DeterministicBigM,
    /// Deterministic policies, bilinear terms lifted via McCormick envelopes.
    DeterministicMcCormick,
    /// Randomized policies with continuous weights; the McCormick rows make
    /// it a linear relaxation (still a MIP through the scenario binaries).
    RandomizedMcCormickRelax,
    /// Deterministic policies plus monotone-policy rows.
    MonotoneBigM,
}

impl ModelKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ModelKind::DeterministicBigM => "det-bigm",
            ModelKind::DeterministicMcCormick => "det-mc",
            ModelKind::RandomizedMcCormickRelax => "rand-mc-relax",
            ModelKind::MonotoneBigM => "mono-bigm",
        }
    }

    fn uses_mccormick(&self) -> bool {
        matches!(
            self,
            ModelKind::DeterministicMcCormick | ModelKind::RandomizedMcCormickRelax
        )
    }

    fn binary_weights(&self) -> bool {
        !matches!(self, ModelKind::RandomizedMcCormickRelax)
    }
}

/// A formulation plus the choice between tightened and naive coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelVariant {
    pub kind: ModelKind,
    /// Use cached bounds for big-M terms, variable bounds, valid cuts and
    /// fixed scenario indicators; otherwise fall back to `10^6` and zeros.
    pub uses_cache: bool,
}

impl ModelVariant {
    pub fn slug(&self) -> String {
        if self.uses_cache {
            self.kind.slug().to_string()
        } else {
            format!("{}-basic", self.kind.slug())
        }
    }
}

/// File name following the `<instance>_<variant>_<alpha>.lp` convention.
pub fn model_file_name<T: Scalar>(instance: &str, variant: &ModelVariant, alpha: T) -> String {
    format!("{}_{}_{}.lp", instance, variant.slug(), alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// One linear constraint row: `sum(coef * var) sense rhs`.
#[derive(Debug, Clone)]
pub struct LpRow<T> {
    pub name: String,
    pub terms: Vec<(T, String)>,
    pub sense: RowSense,
    pub rhs: T,
}

/// Explicit variable bound; `lower == upper` encodes a fixed variable.
#[derive(Debug, Clone)]
pub struct LpBound<T> {
    pub var: String,
    pub lower: T,
    pub upper: T,
}

/// In-memory model: rows plus bound and integrality declarations.
#[derive(Debug, Clone)]
pub struct LpModel<T> {
    pub name: String,
    pub objective: String,
    pub rows: Vec<LpRow<T>>,
    pub bounds: Vec<LpBound<T>>,
    pub binaries: Vec<String>,
}

impl<T: Scalar> LpModel<T> {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Distinct variables referenced anywhere in the model.
    pub fn variable_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut push = |name: &str, names: &mut Vec<String>| {
            if seen.insert(name.to_string()) {
                names.push(name.to_string());
            }
        };
        push(&self.objective, &mut names);
        for row in &self.rows {
            for (_, var) in &row.terms {
                push(var, &mut names);
            }
        }
        for b in &self.bounds {
            push(&b.var, &mut names);
        }
        for b in &self.binaries {
            push(b, &mut names);
        }
        names
    }

    /// Names of rows and bounds violated by an assignment, within `tol`.
    /// Variables absent from the assignment default to zero.
    pub fn check_assignment(&self, values: &HashMap<String, T>, tol: T) -> Vec<String> {
        let get = |var: &str| values.get(var).copied().unwrap_or_else(T::zero);
        let mut violated = Vec::new();
        for row in &self.rows {
            let lhs: T = row.terms.iter().map(|(c, v)| *c * get(v)).sum();
            let ok = match row.sense {
                RowSense::Le => lhs <= row.rhs + tol,
                RowSense::Ge => lhs >= row.rhs - tol,
                RowSense::Eq => (lhs - row.rhs).abs() <= tol,
            };
            if !ok {
                violated.push(row.name.clone());
            }
        }
        for b in &self.bounds {
            let v = get(&b.var);
            if v < b.lower - tol || v > b.upper + tol {
                violated.push(format!("bound:{}", b.var));
            }
        }
        violated
    }

    /// Render the model in CPLEX LP text format. The rendering is a pure
    /// function of the model data, so identical models give identical bytes.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ {}", self.name);
        out.push_str("Minimize\n");
        let _ = writeln!(out, " obj: {}", self.objective);
        out.push_str("Subject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            for (idx, (coef, var)) in row.terms.iter().enumerate() {
                write_term(&mut out, *coef, var, idx == 0);
            }
            let sense = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(out, " {} {}", sense, fmt_num(row.rhs));
        }
        if !self.bounds.is_empty() {
            out.push_str("Bounds\n");
            for b in &self.bounds {
                if b.lower == b.upper {
                    let _ = writeln!(out, " {} = {}", b.var, fmt_num(b.lower));
                } else {
                    let _ = writeln!(out, " {} <= {} <= {}", fmt_num(b.lower), b.var, fmt_num(b.upper));
                }
            }
        }
        if !self.binaries.is_empty() {
            out.push_str("Binaries\n");
            out.push(' ');
            out.push_str(&self.binaries.join(" "));
            out.push('\n');
        }
        out.push_str("End\n");
        out
    }

    /// Write the rendering to a file.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_lp_string())?;
        Ok(())
    }
}

fn fmt_num<T: Scalar>(x: T) -> String {
    format!("{x}")
}

fn write_term<T: Scalar>(out: &mut String, coef: T, var: &str, first: bool) {
    let mag = coef.abs();
    let sign = if coef < T::zero() {
        " -"
    } else if first {
        ""
    } else {
        " +"
    };
    if mag == T::one() {
        let _ = write!(out, "{sign} {var}");
    } else {
        let _ = write!(out, "{sign} {} {var}", fmt_num(mag));
    }
}

fn var_w(i: usize, a: usize) -> String {
    format!("w_{i}_{a}")
}

fn var_z(s: usize) -> String {
    format!("z_{s}")
}

fn var_v(i: usize, s: usize) -> String {
    format!("v_{i}_{s}")
}

fn var_x(i: usize, j: usize, a: usize, s: usize) -> String {
    format!("x_{i}_{j}_{a}_{s}")
}

/// Assemble the model for one variant.
///
/// Cached mode pulls `M`, the per-row big-M terms, the McCormick bounds,
/// the objective bounds, the valid cuts and the fixed scenario indicators
/// from the bounds cache (and requires one). Basic mode fixes every big-M
/// at `10^6` and every lower bound at zero, reproducing the naive setting.
pub fn build_model<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    variant: ModelVariant,
    cache: Option<&BoundsCache<T>>,
    name: &str,
) -> Result<LpModel<T>> {
    check_alpha(alpha)?;
    if variant.uses_cache && cache.is_none() {
        return Err(Error::MissingCache);
    }
    let cache = if variant.uses_cache { cache } else { None };

    let n_states = mdp.n_states();
    let n_actions = mdp.n_actions();
    let n_scen = mdp.n_scenarios();
    let gamma = mdp.gamma();
    let naive = T::of(NAIVE_BIG_M);

    let big_m_global = cache.map_or(naive, |c| c.big_m_global);
    let big_m_state =
        |i: usize, s: usize| cache.map_or(naive, |c| c.big_m_state[(i, s)]);
    let lower = |i: usize, s: usize| cache.map_or(T::zero(), |c| c.v_under[(i, s)]);
    let upper = |i: usize, s: usize| cache.map_or(naive, |c| c.v_bar[(i, s)]);

    let mut rows: Vec<LpRow<T>> = Vec::new();

    // One action distribution per state.
    for i in 0..n_states {
        let terms = (0..n_actions).map(|a| (T::one(), var_w(i, a))).collect();
        rows.push(LpRow {
            name: format!("policy_{i}"),
            terms,
            sense: RowSense::Eq,
            rhs: T::one(),
        });
    }

    // Selected scenarios must cover the confidence level.
    rows.push(LpRow {
        name: "chance".into(),
        terms: (0..n_scen).map(|s| (mdp.probs()[s], var_z(s))).collect(),
        sense: RowSense::Ge,
        rhs: alpha,
    });

    // Quantile link: q.v^s <= y + (1 - z^s) M.
    for s in 0..n_scen {
        let mut terms: Vec<(T, String)> = Vec::new();
        for i in 0..n_states {
            if mdp.q()[i] != T::zero() {
                terms.push((mdp.q()[i], var_v(i, s)));
            }
        }
        terms.push((-T::one(), "y".into()));
        if big_m_global != T::zero() {
            terms.push((big_m_global, var_z(s)));
        }
        rows.push(LpRow {
            name: format!("quantile_{s}"),
            terms,
            sense: RowSense::Le,
            rhs: big_m_global,
        });
    }

    if variant.kind.uses_mccormick() {
        // Lifted Bellman rows: v_i^s >= sum_a c w + gamma sum_{a,j} P x.
        for s in 0..n_scen {
            let scn = mdp.scenario(s);
            for i in 0..n_states {
                let mut terms: Vec<(T, String)> = vec![(T::one(), var_v(i, s))];
                for a in 0..n_actions {
                    if scn.cost[(i, a)] != T::zero() {
                        terms.push((-scn.cost[(i, a)], var_w(i, a)));
                    }
                    for j in 0..n_states {
                        let p = scn.trans[(i, a, j)];
                        if p != T::zero() {
                            terms.push((-gamma * p, var_x(i, j, a, s)));
                        }
                    }
                }
                rows.push(LpRow {
                    name: format!("lift_{i}_{s}"),
                    terms,
                    sense: RowSense::Ge,
                    rhs: T::zero(),
                });
            }
        }
        // McCormick envelope of x = v_j^s w_ia given l <= v <= u.
        for s in 0..n_scen {
            for i in 0..n_states {
                for a in 0..n_actions {
                    for j in 0..n_states {
                        let l = lower(j, s);
                        let u = upper(j, s);
                        let x = var_x(i, j, a, s);
                        rows.push(LpRow {
                            name: format!("mc_lo_{i}_{j}_{a}_{s}"),
                            terms: vec![(T::one(), x.clone()), (-l, var_w(i, a))],
                            sense: RowSense::Ge,
                            rhs: T::zero(),
                        });
                        rows.push(LpRow {
                            name: format!("mc_hi_{i}_{j}_{a}_{s}"),
                            terms: vec![(T::one(), x.clone()), (-u, var_w(i, a))],
                            sense: RowSense::Le,
                            rhs: T::zero(),
                        });
                        rows.push(LpRow {
                            name: format!("mc_vlo_{i}_{j}_{a}_{s}"),
                            terms: vec![
                                (T::one(), x.clone()),
                                (-T::one(), var_v(j, s)),
                                (-u, var_w(i, a)),
                            ],
                            sense: RowSense::Ge,
                            rhs: -u,
                        });
                        rows.push(LpRow {
                            name: format!("mc_vhi_{i}_{j}_{a}_{s}"),
                            terms: vec![
                                (T::one(), x),
                                (-T::one(), var_v(j, s)),
                                (-l, var_w(i, a)),
                            ],
                            sense: RowSense::Le,
                            rhs: -l,
                        });
                    }
                }
            }
        }
    } else {
        // Per-action big-M Bellman rows:
        // v_i^s - gamma sum_j P v_j^s - M_is w_ia >= c_i^s(a) - M_is.
        for s in 0..n_scen {
            let scn = mdp.scenario(s);
            for i in 0..n_states {
                for a in 0..n_actions {
                    let m = big_m_state(i, s);
                    let mut terms: Vec<(T, String)> = Vec::new();
                    for j in 0..n_states {
                        let mut coef = if i == j { T::one() } else { T::zero() };
                        coef = coef - gamma * scn.trans[(i, a, j)];
                        if coef != T::zero() {
                            terms.push((coef, var_v(j, s)));
                        }
                    }
                    if m != T::zero() {
                        terms.push((-m, var_w(i, a)));
                    }
                    rows.push(LpRow {
                        name: format!("bellman_{i}_{a}_{s}"),
                        terms,
                        sense: RowSense::Ge,
                        rhs: scn.cost[(i, a)] - m,
                    });
                }
            }
        }
    }

    // Valid floor cuts y >= b_under[s] z^s, available only with the cache.
    if let Some(c) = cache {
        for s in 0..n_scen {
            let mut terms = vec![(T::one(), "y".into())];
            if c.b_under[s] != T::zero() {
                terms.push((-c.b_under[s], var_z(s)));
            }
            rows.push(LpRow {
                name: format!("cut_{s}"),
                terms,
                sense: RowSense::Ge,
                rhs: T::zero(),
            });
        }
    }

    // Monotone-policy rows: w_ia <= sum_{a' <= a} w_i'a' for i' > i.
    if variant.kind == ModelKind::MonotoneBigM {
        for a in 0..n_actions {
            for i in 0..n_states {
                for ip in i + 1..n_states {
                    let mut terms: Vec<(T, String)> = vec![(T::one(), var_w(i, a))];
                    for ap in 0..=a {
                        terms.push((-T::one(), var_w(ip, ap)));
                    }
                    rows.push(LpRow {
                        name: format!("mono_{i}_{ip}_{a}"),
                        terms,
                        sense: RowSense::Le,
                        rhs: T::zero(),
                    });
                }
            }
        }
    }

    let mut bounds: Vec<LpBound<T>> = Vec::new();
    if let Some(c) = cache {
        bounds.push(LpBound { var: "y".into(), lower: c.b_l, upper: c.b_u });
        for s in 0..n_scen {
            for i in 0..n_states {
                bounds.push(LpBound {
                    var: var_v(i, s),
                    lower: c.v_under[(i, s)],
                    upper: c.v_bar[(i, s)],
                });
            }
        }
        for s in 0..n_scen {
            match c.z_fixed[s] {
                ZFix::Forced0 => {
                    bounds.push(LpBound { var: var_z(s), lower: T::zero(), upper: T::zero() })
                }
                ZFix::Forced1 => {
                    bounds.push(LpBound { var: var_z(s), lower: T::one(), upper: T::one() })
                }
                ZFix::Free => {}
            }
        }
    }
    if !variant.kind.binary_weights() {
        for i in 0..n_states {
            for a in 0..n_actions {
                bounds.push(LpBound { var: var_w(i, a), lower: T::zero(), upper: T::one() });
            }
        }
    }

    let mut binaries: Vec<String> = Vec::new();
    if variant.kind.binary_weights() {
        for i in 0..n_states {
            for a in 0..n_actions {
                binaries.push(var_w(i, a));
            }
        }
    }
    for s in 0..n_scen {
        binaries.push(var_z(s));
    }

    Ok(LpModel {
        name: format!("{name} {} alpha={alpha}", variant.slug()),
        objective: "y".into(),
        rows,
        bounds,
        binaries,
    })
}

/// Build and write a model file; see [`build_model`] for the contents.
pub fn export_model<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    variant: ModelVariant,
    cache: Option<&BoundsCache<T>>,
    path: &Path,
) -> Result<()> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    let model = build_model(mdp, alpha, variant, cache, &name)?;
    model.write_to(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ScenarioParams;
    use crate::preprocess::compute_bounds;
    use ndarray::{array, Array3};

    fn example1(gamma: f64) -> UncertainMdp<f64> {
        let trans = Array3::from_elem((1, 2, 1), 1.0);
        let s1 = ScenarioParams { cost: array![[0.0, 2.0]], trans: trans.clone() };
        let s2 = ScenarioParams { cost: array![[2.0, 0.0]], trans };
        UncertainMdp::new(gamma, vec![1.0], vec![s1, s2], vec![0.5, 0.5]).unwrap()
    }

    fn assignment(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn bigm_model_admits_the_optimal_deterministic_solution() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-10).unwrap();
        let variant = ModelVariant { kind: ModelKind::DeterministicBigM, uses_cache: true };
        let model = build_model(&mdp, 0.9, variant, Some(&cache), "ex1").unwrap();

        // Policy a: scenario values 0 and ~200, y = 200, both selected.
        let v1 = 2.0 / (1.0 - 0.99);
        let sol = assignment(&[
            ("w_0_0", 1.0),
            ("w_0_1", 0.0),
            ("z_0", 1.0),
            ("z_1", 1.0),
            ("v_0_0", 0.0),
            ("v_0_1", v1),
            ("y", v1),
        ]);
        let violated = model.check_assignment(&sol, 1e-6);
        assert!(violated.is_empty(), "violated rows: {violated:?}");
    }

    #[test]
    fn relaxed_model_admits_the_randomized_solution() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-10).unwrap();
        let variant =
            ModelVariant { kind: ModelKind::RandomizedMcCormickRelax, uses_cache: true };
        let model = build_model(&mdp, 0.9, variant, Some(&cache), "ex1").unwrap();

        // Equal-weight policy: both scenario values 100, y = 100,
        // x_{ijas} = v_j^s w_ia = 50.
        let v = 1.0 / (1.0 - 0.99);
        let sol = assignment(&[
            ("w_0_0", 0.5),
            ("w_0_1", 0.5),
            ("z_0", 1.0),
            ("z_1", 1.0),
            ("v_0_0", v),
            ("v_0_1", v),
            ("x_0_0_0_0", v / 2.0),
            ("x_0_0_1_0", v / 2.0),
            ("x_0_0_0_1", v / 2.0),
            ("x_0_0_1_1", v / 2.0),
            ("y", v),
        ]);
        let violated = model.check_assignment(&sol, 1e-6);
        assert!(violated.is_empty(), "violated rows: {violated:?}");
    }

    #[test]
    fn infeasible_assignment_is_flagged() {
        let mdp = example1(0.99);
        let variant = ModelVariant { kind: ModelKind::DeterministicBigM, uses_cache: false };
        let model = build_model(&mdp, 0.9, variant, None, "ex1").unwrap();
        // Selecting no scenario violates the chance row.
        let sol = assignment(&[("w_0_0", 1.0), ("y", 0.0)]);
        let violated = model.check_assignment(&sol, 1e-6);
        assert!(violated.iter().any(|r| r == "chance"));
    }

    #[test]
    fn byte_deterministic_render() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        for kind in [
            ModelKind::DeterministicBigM,
            ModelKind::DeterministicMcCormick,
            ModelKind::RandomizedMcCormickRelax,
            ModelKind::MonotoneBigM,
        ] {
            let variant = ModelVariant { kind, uses_cache: true };
            let a = build_model(&mdp, 0.9, variant, Some(&cache), "ex1").unwrap().to_lp_string();
            let b = build_model(&mdp, 0.9, variant, Some(&cache), "ex1").unwrap().to_lp_string();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn row_and_variable_counts() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        let (h, a, s) = (1usize, 2usize, 2usize);

        let bigm = build_model(
            &mdp,
            0.9,
            ModelVariant { kind: ModelKind::DeterministicBigM, uses_cache: true },
            Some(&cache),
            "ex1",
        )
        .unwrap();
        // policy + chance + quantile + bellman + cuts
        assert_eq!(bigm.n_rows(), h + 1 + s + s * h * a + s);
        // y + w + z + v
        assert_eq!(bigm.variable_names().len(), 1 + h * a + s + h * s);

        let mc = build_model(
            &mdp,
            0.9,
            ModelVariant { kind: ModelKind::DeterministicMcCormick, uses_cache: true },
            Some(&cache),
            "ex1",
        )
        .unwrap();
        assert_eq!(mc.n_rows(), h + 1 + s + s * h + 4 * s * a * h * h + s);
        assert_eq!(mc.variable_names().len(), 1 + h * a + s + h * s + s * a * h * h);
    }

    #[test]
    fn basic_mode_uses_naive_big_m() {
        let mdp = example1(0.99);
        let variant = ModelVariant { kind: ModelKind::DeterministicBigM, uses_cache: false };
        let text = build_model(&mdp, 0.9, variant, None, "ex1").unwrap().to_lp_string();
        assert!(text.contains("1000000"));
        assert!(!text.contains("Bounds\n"));
    }

    #[test]
    fn cached_mode_requires_cache() {
        let mdp = example1(0.99);
        let variant = ModelVariant { kind: ModelKind::DeterministicBigM, uses_cache: true };
        assert!(matches!(
            build_model(&mdp, 0.9, variant, None, "ex1").unwrap_err(),
            Error::MissingCache
        ));
    }

    #[test]
    fn forced_indicators_become_fixed_bounds() {
        let mdp = example1(0.99);
        let mut cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        cache.z_fixed[0] = ZFix::Forced1;
        cache.z_fixed[1] = ZFix::Forced0;
        let variant = ModelVariant { kind: ModelKind::DeterministicBigM, uses_cache: true };
        let model = build_model(&mdp, 0.9, variant, Some(&cache), "ex1").unwrap();
        let text = model.to_lp_string();
        assert!(text.contains(" z_0 = 1\n"));
        assert!(text.contains(" z_1 = 0\n"));
    }

    #[test]
    fn monotone_rows_present() {
        let trans = Array3::from_elem((2, 2, 2), 0.5);
        let scn = ScenarioParams { cost: array![[1.0, 2.0], [3.0, 4.0]], trans };
        let mdp = UncertainMdp::new(0.9, vec![0.5, 0.5], vec![scn], vec![1.0]).unwrap();
        let variant = ModelVariant { kind: ModelKind::MonotoneBigM, uses_cache: false };
        let model = build_model(&mdp, 0.9, variant, None, "toy").unwrap();
        let mono_rows = model.rows.iter().filter(|r| r.name.starts_with("mono_")).count();
        // |A| rows per ordered state pair; 2 actions, one pair here.
        assert_eq!(mono_rows, 2);
    }

    #[test]
    fn file_name_convention() {
        let variant = ModelVariant { kind: ModelKind::DeterministicBigM, uses_cache: true };
        assert_eq!(model_file_name("inv42", &variant, 0.9), "inv42_det-bigm_0.9.lp");
        let basic = ModelVariant { kind: ModelKind::DeterministicMcCormick, uses_cache: false };
        assert_eq!(model_file_name("inv42", &basic, 1.0), "inv42_det-mc-basic_1.lp");
    }

    #[test]
    fn coefficient_validity_in_cached_mode() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        for s in 0..2 {
            for i in 0..1 {
                let m = cache.big_m_state[(i, s)];
                assert!(m >= 0.0);
                assert_eq!(m, cache.v_bar[(i, s)] - cache.v_under[(i, s)]);
            }
        }
    }
}
