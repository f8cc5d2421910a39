//! Scenario operations. Each returns an [`OpOutcome`] carrying its
//! certificate, witness data and CSV extracts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use warpcone::embedding::{box_to_cone_embedding, compression_profile, slice_to_cone_embedding, ConePoint, PointEmbedding};
use warpcone::fixtures::{self, FixC, FixD, Fixture};
use warpcone::hr::{
    averaged_singleton_hr, cone_hr_certificate, cone_hr_from_slice_hr, marginal_certificate, marginalize_cone_hr,
    scaled_completion_metric, singleton_hr, verify_hr, Closeness,
};
use warpcone::profinite::{box_space, section_scale, section_scale_check, slice_decomposition, slice_metric_closed_form};
use warpcone::rational::{self, q, Rational};
use warpcone::spectral::{expander_family_report, spectral_gap, SpectralOptions};
use warpcone::torus::{embedded_expander_check, nested_stabilizer_check, orbit, orbit_threshold, IntegerMatrixGens, RationalTorusModel};
use warpcone::warp::{delta_n, half_step_distance, one_step_distance, one_step_sandwich, warped_metric};
use warpcone::{Error, HalfStep, Multigraph, TruncatedCompletion, WarpSystem};

use crate::config::{Arithmetic, Caps, FixtureConfig, ModeConfig, Operation};

/// Models larger than this skip the whole-model δ tables behind orbit thresholds.
const THRESHOLD_MODEL_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    /// Two independent computations disagreed; the scenario stops here.
    Disagreement,
    Truncated,
    Error,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub extension: &'static str,
    pub content: String,
}

impl Table {
    fn csv(name: &str, content: String) -> Self {
        Self { name: name.into(), extension: "csv", content }
    }
}

#[derive(Debug, Clone)]
pub struct OpOutcome {
    pub status: Status,
    pub result: Value,
    pub witness: Option<Value>,
    pub message: Option<String>,
    pub tables: Vec<Table>,
}

impl OpOutcome {
    fn certified(passed: bool, result: Value, witness: Option<Value>, tables: Vec<Table>) -> Self {
        let status = if passed { Status::Passed } else { Status::Failed };
        Self { status, result, witness, message: None, tables }
    }

    fn disagreement(result: Value, witness: Value, message: String) -> Self {
        Self { status: Status::Disagreement, result, witness: Some(witness), message: Some(message), tables: vec![] }
    }
}

#[derive(Debug)]
pub enum OpError {
    Truncated(String),
    Invalid(String),
}

impl From<Error> for OpError {
    fn from(e: Error) -> Self {
        match e {
            Error::OrbitCap { .. } | Error::BallRadiusOverflow { .. } => OpError::Truncated(e.to_string()),
            e => OpError::Invalid(e.to_string()),
        }
    }
}

type OpResult = Result<OpOutcome, OpError>;

impl OpError {
    pub fn into_outcome(self) -> OpOutcome {
        let (status, message) = match self {
            OpError::Truncated(m) => (Status::Truncated, m),
            OpError::Invalid(m) => (Status::Error, m),
        };
        OpOutcome { status, result: Value::Null, witness: None, message: Some(message), tables: vec![] }
    }
}

/// The resolved fixture shared by all operations of a scenario.
pub struct Loaded {
    pub name: Option<String>,
    pub system: Option<WarpSystem>,
    pub trunc: Option<TruncatedCompletion>,
    pub fix_c: Option<FixC>,
    pub fix_d: Option<FixD>,
}

impl Loaded {
    pub fn load(config: &FixtureConfig) -> Result<Self, Error> {
        let mut out = Loaded { name: None, system: None, trunc: None, fix_c: None, fix_d: None };
        if let Some(spec) = &config.system {
            out.name = Some("custom-system".into());
            out.system = Some(spec.build()?);
        } else if let Some(spec) = &config.chain {
            let trunc = spec.build(config.allow_convention_violation)?;
            out.name = Some("custom-chain".into());
            out.system = Some(trunc.warp_system()?);
            out.trunc = Some(trunc);
        } else if let Some(name) = &config.name {
            let fixture = Fixture::parse(name).ok_or_else(|| Error::Parse(format!("unknown fixture {name:?}")))?;
            out.name = Some(fixture.name().into());
            match fixture {
                Fixture::Z8Rot => out.system = Some(fixtures::fix_a()?),
                Fixture::Z3Chain => {
                    let trunc = fixtures::fix_b(config.level.unwrap_or(3))?;
                    out.system = Some(trunc.warp_system()?);
                    out.trunc = Some(trunc);
                }
                Fixture::Sl2Q6 => {
                    let c = fixtures::fix_c()?;
                    out.system = Some(c.gens.warp_system(&c.model)?);
                    out.fix_c = Some(c);
                }
                Fixture::Exp2Window => {
                    let d = fixtures::fix_d(config.window.unwrap_or(8))?;
                    out.system = Some(d.system.clone());
                    out.fix_d = Some(d);
                }
            }
        }
        Ok(out)
    }
}

pub struct Context<'a> {
    pub fixture: &'a Loaded,
    pub mode: &'a ModeConfig,
    pub caps: Caps,
}

impl Context<'_> {
    fn check_size(&self, points: usize) -> Result<(), OpError> {
        if points > self.caps.max_points {
            return Err(OpError::Truncated(format!("fixture has {points} points, cap is {}", self.caps.max_points)));
        }
        Ok(())
    }

    fn system(&self) -> Result<&WarpSystem, OpError> {
        let sys = self.fixture.system.as_ref().ok_or_else(|| OpError::Invalid("no fixture selected".into()))?;
        self.check_size(sys.len())?;
        Ok(sys)
    }

    fn trunc(&self) -> Result<&TruncatedCompletion, OpError> {
        let trunc = self
            .fixture
            .trunc
            .as_ref()
            .ok_or_else(|| OpError::Invalid("this operation needs a quotient-chain fixture (FIX-B or [fixture.chain])".into()))?;
        self.check_size(trunc.len())?;
        Ok(trunc)
    }

    fn is_fix_b(&self) -> bool {
        self.fixture.name.as_deref() == Some("FIX-B")
    }

    /// First pair where `a` and `b` differ, exactly or beyond `tol` in float mode.
    fn disagreement(&self, a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Option<(usize, usize)> {
        for (i, (ra, rb)) in a.iter().zip(b).enumerate() {
            for (j, (x, y)) in ra.iter().zip(rb).enumerate() {
                let differ = match self.mode.arithmetic {
                    Arithmetic::Exact => x != y,
                    Arithmetic::Float => (rational::to_f64(x) - rational::to_f64(y)).abs() > self.mode.tol,
                };
                if differ {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

fn fmt(r: &Rational) -> String {
    rational::format(r)
}

fn matrix(m: &[Vec<Rational>]) -> Value {
    Value::from(m.iter().map(|row| row.iter().map(fmt).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

pub fn run(ctx: &Context, op: &Operation) -> OpOutcome {
    let out = match op {
        Operation::Warp { scale, one_step, divergence } => warp(ctx, *scale, *one_step, *divergence),
        Operation::Slice { scales } => slice(ctx, scales),
        Operation::Delta { n_max } => delta(ctx, *n_max),
        Operation::BoxSpace {} => box_levels(ctx),
        Operation::Spectral { edges } => spectral(ctx, edges.as_deref()),
        Operation::EmbedBox { scale } => embed_box(ctx, scale.unwrap_or(q(4, 1))),
        Operation::EmbedCone { levels } => embed_cone(ctx, *levels),
        Operation::Hr { scale, radius, eps, cone_radius, r_max } => hr(
            ctx,
            scale.unwrap_or(q(8, 1)),
            radius.unwrap_or(q(3, 1)),
            eps.unwrap_or(q(1, 2)),
            cone_radius.unwrap_or(q(1, 1)),
            r_max.unwrap_or(12),
        ),
        Operation::Stabilizer { coprime, power, radius } => stabilizer(ctx, coprime, *power, radius.unwrap_or(6)),
        Operation::Orbit { dim, denominator, coprime, power } => orbit_op(ctx, *dim, *denominator, coprime, *power),
    };
    out.unwrap_or_else(OpError::into_outcome)
}

fn warp(ctx: &Context, scale: Option<Rational>, one_step: bool, divergence: Option<u32>) -> OpResult {
    let base = ctx.system()?;
    let sys = match scale {
        Some(s) => base.with_scale(s)?,
        None => base.clone(),
    };
    let w = warped_metric(&sys);
    let mut passed = w.is_pseudometric();
    let mut witness = None;
    // Generator moves cost at most 1 and the warped metric never exceeds s·d.
    'outer: for x in 0..sys.len() {
        for y in 0..sys.len() {
            if w.get(x, y) > sys.space().dist(x, y) {
                passed = false;
                witness = Some(json!({"pair": [x, y], "check": "d_gamma <= s*d"}));
                break 'outer;
            }
        }
        for g in sys.generators().non_identity() {
            if let Some(y) = sys.act(g, x) {
                if w.get(x, y) > rational::one() {
                    passed = false;
                    witness = Some(json!({"pair": [x, y], "check": "d_gamma(x, g.x) <= 1"}));
                    break 'outer;
                }
            }
        }
    }
    let mut result = json!({
        "points": sys.len(),
        "labels": sys.space().labels(),
        "scale": fmt(&sys.scale()),
        "lipschitz": fmt(&sys.lipschitz()),
        "isometric": sys.is_isometric(),
        "truncated_action": sys.is_truncated(),
        "distances": matrix(&w.values),
    });
    let mut tables = vec![Table::csv("distances", w.to_csv())];
    if one_step {
        let d = one_step_distance(&sys, &w, ctx.caps.max_radius as u64)?;
        let violation = one_step_sandwich(&sys, &w, &d);
        if let Some((x, y)) = violation {
            passed = false;
            witness = Some(json!({"pair": [x, y], "check": "d_gamma <= D_gamma <= L^d_gamma * d_gamma"}));
        }
        if sys.is_isometric() {
            if let Some((x, y)) = ctx.disagreement(&d.values, &w.values) {
                let witness = json!({"pair": [x, y], "one_step": fmt(&d.get(x, y)), "warped": fmt(&w.get(x, y))});
                return Ok(OpOutcome::disagreement(result, witness, "isometric action but D_gamma != d_gamma".into()));
            }
        }
        result["one_step"] = json!({"distances": matrix(&d.values), "sandwich_ok": violation.is_none()});
        tables.push(Table::csv("one-step", d.to_csv()));
    }
    let rows = match (&ctx.fixture.fix_d, divergence) {
        (Some(fix), n) => n.unwrap_or(6).min(fix.window.saturating_sub(1) as u32),
        (None, Some(_)) => return Err(OpError::Invalid("the divergence table needs FIX-D".into())),
        (None, None) => 0,
    };
    if rows > 0 {
        let fix = ctx.fixture.fix_d.as_ref().expect("checked above");
        let mut csv = String::from("n,d_gamma,delta_gamma\n");
        let mut table = Vec::new();
        let mut last_ratio = 0.0;
        let mut increasing = true;
        let mut bounded = true;
        for n in 1..=rows as i32 {
            let (x, x2) = fix.pair(n);
            let d = w.get(x, x2);
            let half = half_step_distance(&sys, x, x2, ctx.caps.max_radius);
            let delta = match &half {
                HalfStep::Exact { value, .. } => fmt(value),
                HalfStep::Undetermined { .. } => "undetermined".into(),
            };
            if let Some(v) = half.value() {
                let ratio = rational::to_f64(&v) / rational::to_f64(&d);
                increasing &= ratio > last_ratio;
                last_ratio = ratio;
            } else {
                increasing = false;
            }
            bounded &= d <= q(2, 1);
            csv.push_str(&format!("{n},{},{delta}\n", fmt(&d)));
            table.push(json!({"n": n, "x": x, "x_prime": x2, "d_gamma": fmt(&d), "delta_gamma": delta}));
        }
        passed &= increasing && bounded;
        result["divergence"] = json!({"rows": table, "d_gamma_at_most_2": bounded, "ratio_increasing": increasing});
        tables.push(Table::csv("divergence", csv));
    }
    Ok(OpOutcome::certified(passed, result, witness, tables))
}

fn default_slice_scales(trunc: &TruncatedCompletion) -> Vec<Rational> {
    let mut scales: Vec<Rational> = [1, 2, 4, 8].iter().map(|&s| Rational::from_integer(s)).collect();
    for n in 1..=trunc.level() {
        scales.push(rational::max(section_scale(trunc, n), rational::one()));
    }
    scales.sort();
    scales.dedup();
    scales
}

fn slice(ctx: &Context, scales: &[Rational]) -> OpResult {
    let trunc = ctx.trunc()?;
    let scales = if scales.is_empty() { default_slice_scales(trunc) } else { scales.to_vec() };
    let sys = trunc.warp_system()?;
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    let mut passed = true;
    let mut witness = None;
    for (k, &s) in scales.iter().enumerate() {
        let closed = slice_metric_closed_form(trunc, s)?;
        let dijkstra = warped_metric(&sys.with_scale(s)?);
        if let Some((g, h)) = ctx.disagreement(&closed.values, &dijkstra.values) {
            let witness = json!({"scale": fmt(&s), "pair": [g, h], "closed_form": fmt(&closed.get(g, h)), "dijkstra": fmt(&dijkstra.get(g, h))});
            return Ok(OpOutcome::disagreement(json!({"slices": rows}), witness, "closed form differs from Dijkstra".into()));
        }
        let dec = slice_decomposition(trunc, s)?;
        let sandwich = dec.sandwich_violation(&closed);
        if let Some((g, h)) = sandwich {
            passed = false;
            witness.get_or_insert(json!({"scale": fmt(&s), "pair": [g, h], "check": "d_s' <= 2 d_s <= 2 d_s' + 2"}));
        }
        rows.push(json!({
            "scale": fmt(&s),
            "n_s": dec.n_s,
            "cap": fmt(&dec.cap),
            "closed_form_equals_dijkstra": true,
            "sandwich_ok": sandwich.is_none(),
            "distances": matrix(&closed.values),
        }));
        tables.push(Table::csv(&format!("scale-{k}"), closed.to_csv()));
    }
    let a1 = trunc.weights().get(1);
    let result = json!({
        "points": trunc.len(),
        "level": trunc.level(),
        "weights": trunc.weights().values().iter().map(fmt).collect::<Vec<_>>(),
        "a1_exceeds_two": a1 > q(2, 1),
        "convention_overridden": trunc.convention_overridden(),
        "slices": rows,
    });
    Ok(OpOutcome::certified(passed, result, witness, tables))
}

fn delta(ctx: &Context, n_max: Option<usize>) -> OpResult {
    let sys = ctx.system()?;
    let n_max = n_max.unwrap_or_else(|| rational::ceil_u64(&(sys.scale() * sys.space().diameter())) as usize + 1);
    let table = delta_n(sys, n_max);
    let mut csv = String::from("n,x,y,delta\n");
    let mut layers = Vec::new();
    let mut monotone = true;
    let mut witness = None;
    for n in 0..=n_max {
        let layer = table.layer(n);
        for (x, row) in layer.iter().enumerate() {
            for (y, v) in row.iter().enumerate() {
                csv.push_str(&format!("{n},{x},{y},{}\n", fmt(v)));
                if n > 0 && *v > table.get(n - 1, x, y) {
                    monotone = false;
                    witness.get_or_insert(json!({"n": n, "pair": [x, y], "check": "delta_n <= delta_(n-1)"}));
                }
            }
        }
        layers.push(matrix(&layer));
    }
    if let Some((x, y)) = ctx.disagreement(&table.layer(0), sys.space().base_matrix()) {
        return Ok(OpOutcome::disagreement(Value::Null, json!({"pair": [x, y]}), "delta_0 differs from the base metric".into()));
    }
    let result = json!({"n_max": n_max, "points": sys.len(), "layers": layers});
    Ok(OpOutcome::certified(monotone, result, witness, vec![Table::csv("delta", csv)]))
}

fn box_levels(ctx: &Context) -> OpResult {
    let trunc = ctx.trunc()?;
    let mut csv = String::from("n,order,diameter,weight,section_scale,passed\n");
    let mut rows = Vec::new();
    let mut passed = true;
    let mut witness = None;
    for level in box_space(trunc.chain()).into_iter().take(trunc.level()) {
        let cert = section_scale_check(trunc, level.n)?;
        let a = trunc.weights().get(level.n);
        if !cert.passed {
            passed = false;
            witness.get_or_insert(json!({"n": level.n, "pair": cert.witness}));
        }
        csv.push_str(&format!("{},{},{},{},{},{}\n", level.n, level.order, level.diameter, fmt(&a), fmt(&cert.s), cert.passed));
        rows.push(json!({
            "n": level.n,
            "order": level.order,
            "diameter": level.diameter,
            "weight": fmt(&a),
            "section_scale": to_value(&cert),
        }));
    }
    Ok(OpOutcome::certified(passed, json!({"levels": rows}), witness, vec![Table::csv("box", csv)]))
}

fn spectral(ctx: &Context, edges: Option<&Path>) -> OpResult {
    let opts = SpectralOptions::default();
    let residual_ok = |residual: f64, degree: usize| residual <= opts.residual_factor * degree.max(1) as f64;
    let single = |id: &str, g: &Multigraph| -> OpResult {
        ctx.check_size(g.vertex_count())?;
        let spec = spectral_gap(id, g, &opts)?;
        let ok = spec.residual.is_none_or(|r| residual_ok(r, spec.degree));
        let csv = format!(
            "n,order,lambda2,cheeger_lo,cheeger_hi\n1,{},{},{},{}\n",
            spec.vertices,
            spec.lambda2.unwrap_or(0.0),
            spec.cheeger_lower.unwrap_or(0.0),
            spec.cheeger_upper.unwrap_or(0.0)
        );
        Ok(OpOutcome::certified(ok, to_value(&spec), None, vec![Table::csv("spectra", csv)]))
    };
    if let Some(path) = edges {
        let text = std::fs::read_to_string(path).map_err(|e| OpError::Invalid(format!("{}: {e}", path.display())))?;
        return single(&path.display().to_string(), &Multigraph::parse_edge_list(&text, None)?);
    }
    if let Some(trunc) = &ctx.fixture.trunc {
        let graphs: Vec<(usize, Multigraph)> =
            trunc.chain().groups()[..trunc.level()].iter().enumerate().map(|(k, g)| (k + 1, g.cayley_graph())).collect();
        for (_, g) in &graphs {
            ctx.check_size(g.vertex_count())?;
        }
        let report = expander_family_report(&graphs, &opts)?;
        let bad = report.rows.iter().find(|r| !residual_ok(r.residual, r.degree));
        let witness = bad.map(|r| json!({"n": r.n, "residual": r.residual}));
        return Ok(OpOutcome::certified(bad.is_none(), to_value(&report), witness, vec![Table::csv("spectra", report.to_csv())]));
    }
    if let Some(c) = &ctx.fixture.fix_c {
        let o = orbit(&c.model, &c.gens, c.x1, ctx.caps.max_points)?;
        return single("fix-c-orbit", &o.graph(&c.gens.gens));
    }
    Err(OpError::Invalid("spectral needs a chain fixture, FIX-C or --edges".into()))
}

fn circle_embeddings(trunc: &TruncatedCompletion) -> Result<Vec<PointEmbedding>, OpError> {
    trunc.chain().groups()[..trunc.level()]
        .iter()
        .map(PointEmbedding::cyclic_group)
        .collect::<Result<_, _>>()
        .map_err(|e| OpError::Invalid(format!("box embeddings need a chain of cyclic groups: {e}")))
}

fn to_f64_matrix(m: &[Vec<Rational>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect()
}

fn embed_box(ctx: &Context, s: Rational) -> OpResult {
    let trunc = ctx.trunc()?;
    let boxes = circle_embeddings(trunc)?;
    let rho_minus = |r: f64| 2.0 * r / PI;
    let rho_plus = |r: f64| r;
    let e = box_to_cone_embedding(trunc, s, &boxes, &rho_minus, &rho_plus)?;
    let d_s = slice_metric_closed_form(trunc, s)?;
    let profile = compression_profile(&e.embedding, &to_f64_matrix(&d_s.values))?;
    let csv = profile.to_csv();
    let witness = e.lower_violation.as_ref().or(e.upper_violation.as_ref()).map(to_value);
    let result = json!({"embedding": to_value(&e), "profile": to_value(&profile)});
    Ok(OpOutcome::certified(e.passed(), result, witness, vec![Table::csv("profile", csv)]))
}

fn embed_cone(ctx: &Context, levels: u32) -> OpResult {
    if !ctx.is_fix_b() {
        return Err(OpError::Invalid("embed-cone uses the FIX-B dyadic slices".into()));
    }
    let trunc = ctx.trunc()?;
    if trunc.level() != 3 {
        return Err(OpError::Invalid("embed-cone needs FIX-B at level 3".into()));
    }
    let slices = fixtures::fix_b_dyadic_slices(0..=levels)?;
    let cone = slice_to_cone_embedding(slices, 1.0, 0)?;
    let top = 4 * (1i128 << levels);
    let points: Vec<ConePoint> =
        (4..=top).flat_map(|k| (0..trunc.len()).map(move |y| ConePoint { s: q(k, 4), y })).collect();
    let report = cone.verify(&points, |u| Ok(slice_metric_closed_form(trunc, u)?.values))?;
    let checks = [&report.far_lower, &report.far_upper, &report.near_upper, &report.near_lower];
    let passed = checks.iter().all(|c| c.passed());
    let witness = checks.iter().find(|c| !c.passed()).map(|c| to_value(&c.witness));
    let csv = report.profile.to_csv();
    Ok(OpOutcome::certified(passed, to_value(&report), witness, vec![Table::csv("profile", csv)]))
}

fn hr(ctx: &Context, s: Rational, r: Rational, eps: Rational, cone_r: Rational, r_max: u64) -> OpResult {
    let trunc = ctx.trunc()?;
    let single = singleton_hr(trunc, s, r)?;
    let cert = verify_hr(&single.family, &scaled_completion_metric(trunc, s), Closeness::Below)?;
    let singleton_ok = cert.passed && rational::is_zero(&cert.max_variation) && single.family.s < r;
    let mut tables = vec![Table::csv("singleton-family", single.family.to_csv())];
    let mut slices = BTreeMap::new();
    for m in 1..=r_max {
        slices.insert(m, averaged_singleton_hr(trunc, Rational::from_integer(m as i128), cone_r, eps)?.family);
    }
    let cone = cone_hr_from_slice_hr(&slices, cone_r, eps, r_max, 0)?;
    let level = |u: Rational| Ok(slice_metric_closed_form(trunc, u)?.values);
    let cone_cert = cone_hr_certificate(&cone, &slices, level, |m| level(Rational::from_integer(m as i128)))?;
    let mut marginals = Vec::new();
    let mut marginal_witness = None;
    for m in 1..=r_max {
        let u = Rational::from_integer(m as i128);
        let marginal = marginalize_cone_hr(&cone, u, cone_cert.support_bound)?;
        let mc = marginal_certificate(&cone, u, &marginal, &level(u)?)?;
        if !mc.passed() && marginal_witness.is_none() {
            marginal_witness = Some(json!({"level": m, "certificate": to_value(&mc)}));
        }
        marginals.push(to_value(&mc));
    }
    tables.push(Table::csv("cone-family", cone.family.to_csv()));
    let passed = singleton_ok && cone_cert.passed() && marginal_witness.is_none();
    let witness = if !singleton_ok {
        Some(json!({"singleton": to_value(&cert)}))
    } else if !cone_cert.passed() {
        Some(json!({"cone": to_value(&cone_cert)}))
    } else {
        marginal_witness
    };
    let result = json!({
        "singleton": {"scale": fmt(&s), "radius": fmt(&r), "support": fmt(&single.family.s), "n_star": single.n_star, "certificate": to_value(&cert)},
        "cone": {"radius": fmt(&cone_r), "eps": fmt(&eps), "r_max": r_max, "points": cone.points.len(), "certificate": to_value(&cone_cert)},
        "marginals": marginals,
    });
    Ok(OpOutcome::certified(passed, result, witness, tables))
}

fn stabilizer(ctx: &Context, coprime: &[u64], power: u32, radius: u32) -> OpResult {
    if radius > ctx.caps.max_radius {
        return Err(OpError::Truncated(format!("word-ball radius {radius} exceeds the cap {}", ctx.caps.max_radius)));
    }
    let report = nested_stabilizer_check(coprime, power, radius)?;
    let witness = report
        .disagreements
        .first()
        .map(|w| json!({"disagreement": to_value(w)}))
        .or_else(|| report.nesting_witnesses.first().map(|w| json!({"nesting": to_value(w)})));
    Ok(OpOutcome::certified(report.all_agree && report.nested, to_value(&report), witness, vec![]))
}

fn orbit_op(ctx: &Context, dim: usize, denominator: Option<u64>, coprime: &[u64], power: u32) -> OpResult {
    let (model, gens, x) = match (&ctx.fixture.fix_c, denominator, coprime.is_empty()) {
        (Some(c), None, true) => (c.model.clone(), c.gens.clone(), c.x1),
        (_, Some(den), true) => {
            let model = RationalTorusModel::new(dim, den)?;
            let mut point = vec![rational::zero(); dim];
            point[0] = q(1, den as i128);
            let x = model.locate(&point)?;
            (model, IntegerMatrixGens::elementary(dim)?, x)
        }
        (_, None, false) => {
            let dims = coprime.len();
            let dens: Vec<u64> = coprime.iter().map(|&p| p.pow(power)).collect();
            let model = RationalTorusModel::new(dims, dens.iter().product())?;
            let point: Vec<Rational> = dens.iter().map(|&d| q(1, d as i128)).collect();
            let x = model.locate(&point)?;
            (model, IntegerMatrixGens::elementary(dims)?, x)
        }
        _ => return Err(OpError::Invalid("orbit takes FIX-C, --denominator or --coprime/--power".into())),
    };
    let o = orbit(&model, &gens, x, ctx.caps.max_points)?;
    let labels: Vec<String> = o.points.iter().map(|&p| model.label(p)).collect();
    let edges = o.graph(&gens.gens).to_edge_list();
    let mut result = json!({
        "model_points": model.len(),
        "base_point": model.label(x),
        "orbit": labels,
        "orbit_size": o.len(),
        "diameter": o.diameter(),
        "word_distance": o.word_distance,
    });
    let tables = vec![Table { name: "orbit-graph".into(), extension: "edges", content: edges }];
    if model.len() > THRESHOLD_MODEL_LIMIT {
        result["threshold"] = json!({"skipped": format!("model of {} points exceeds {THRESHOLD_MODEL_LIMIT}", model.len())});
        let mut out = OpOutcome::certified(true, result, None, tables);
        out.status = Status::Truncated;
        out.message = Some("stabilization threshold skipped on a large model".into());
        return Ok(out);
    }
    let sys = gens.warp_system(&model)?;
    let s_star = orbit_threshold(&sys, &o)?;
    let check = embedded_expander_check(&sys, &o, rational::max(s_star, rational::one()))?;
    result["threshold"] = to_value(&check);
    let witness = check.witness.map(|(i, j)| json!({"pair": [i, j]}));
    Ok(OpOutcome::certified(check.isometric, result, witness, tables))
}
