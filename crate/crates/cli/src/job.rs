//! Job documents and their execution.

use std::collections::BTreeMap;
use std::fmt;

use idecomp_core::chaos::{self, GaussianModel, Monomial};
use idecomp_core::diagram::{
    check_intersection_property_functor, decompose_functor, FunctorFailureReason,
};
use idecomp_core::graphical::{self, DiscreteModel, GibbsState, DEFAULT_FACTOR_TOL};
use idecomp_core::interaction::{
    check_intersection_property, compare_projections, decompose, meet_semilattice_shortcut,
    FailureReason, IntersectionReport, SubspaceFamily,
};
use idecomp_core::linalg::MatrixSpec;
use idecomp_core::poset::PosetSpec;
use idecomp_core::{AmbientSpace, Error, IsometryDiagram, Limits, Poset, Tolerance};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::report::{num, Report};

/// An input problem, located by a JSON pointer into the job document.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub pointer: String,
    pub message: String,
}

impl InputError {
    pub fn at(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pointer.is_empty() {
            write!(f, "input error: {}", self.message)
        } else {
            write!(f, "input error at {}: {}", self.pointer, self.message)
        }
    }
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer(base: &str, path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = base.to_owned();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

fn parse<T: DeserializeOwned>(value: &Value) -> Result<T, InputError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let ptr = pointer("", e.path());
        InputError::at(ptr, e.into_inner())
    })
}

/// Command-line overrides applied on top of the job's own settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tol_rank: Option<f64>,
    pub tol_proj: Option<f64>,
    pub tol_eq: Option<f64>,
    pub max_lower_sets: Option<usize>,
    pub max_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Decompose,
    Check,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Variable {
    name: String,
    states: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    variables: Vec<Variable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyJob {
    #[serde(default)]
    poset: Option<PosetSpec>,
    #[serde(default)]
    ambient_dim: Option<usize>,
    #[serde(default)]
    gram: Option<MatrixSpec>,
    /// Element label ↦ list of generator vectors.
    #[serde(default)]
    generators: Option<BTreeMap<String, Vec<Vec<f64>>>>,
    #[serde(default)]
    factor_model: Option<ModelSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramJob {
    poset: PosetSpec,
    dims: BTreeMap<String, usize>,
    #[serde(default)]
    edges: BTreeMap<String, MatrixSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GibbsJob {
    model: ModelSpec,
    dist: Vec<f64>,
    classes: Vec<Vec<String>>,
    #[serde(default)]
    rel_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Sites {
    Count(usize),
    Names(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChaosJob {
    sites: Sites,
    #[serde(default)]
    cov: Option<MatrixSpec>,
    max_degree: usize,
    #[serde(default)]
    expand: Vec<String>,
}

fn settings(job: &Value, ov: &Overrides) -> Result<(Tolerance, Limits), InputError> {
    let mut tol: Tolerance = match job.get("tolerance") {
        Some(v) => serde_path_to_error::deserialize(v)
            .map_err(|e| InputError::at(pointer("/tolerance", e.path()), e.into_inner()))?,
        None => Tolerance::default(),
    };
    let mut limits: Limits = match job.get("limits") {
        Some(v) => serde_path_to_error::deserialize(v)
            .map_err(|e| InputError::at(pointer("/limits", e.path()), e.into_inner()))?,
        None => Limits::default(),
    };
    if let Some(t) = ov.tol_rank {
        tol.tol_rank = t;
    }
    if let Some(t) = ov.tol_proj {
        tol.tol_proj = t;
    }
    if let Some(t) = ov.tol_eq {
        tol.tol_eq = t;
    }
    if let Some(c) = ov.max_lower_sets {
        limits.max_lower_sets = c;
    }
    if let Some(c) = ov.max_dim {
        limits.max_dim = c;
    }
    if !tol.is_valid() {
        return Err(InputError::at("/tolerance", "tolerances must be positive and finite"));
    }
    Ok((tol, limits))
}

/// Runs a parsed job document.
pub fn run(job: &Value, mode: Mode, ov: &Overrides) -> Result<Report, InputError> {
    let obj = job
        .as_object()
        .ok_or_else(|| InputError::at("", "job must be a JSON object"))?;
    let kind = obj
        .get("kind")
        .ok_or_else(|| InputError::at("/kind", "missing field `kind`"))?
        .as_str()
        .ok_or_else(|| InputError::at("/kind", "expected a string"))?;
    let (tol, limits) = settings(job, ov)?;
    let mut payload = obj.clone();
    payload.remove("kind");
    payload.remove("tolerance");
    payload.remove("limits");
    let payload = Value::Object(payload);
    let mut report = match kind {
        "family" => run_family(parse(&payload)?, mode, tol, &limits)?,
        "diagram" => run_diagram(parse(&payload)?, mode, tol, &limits)?,
        "gibbs" => run_gibbs(parse(&payload)?, tol, &limits)?,
        "chaos" => run_chaos(parse(&payload)?, tol, &limits)?,
        other => {
            return Err(InputError::at(
                "/kind",
                format!("unknown kind `{other}`; expected family, diagram, gibbs or chaos"),
            ))
        }
    };
    report.body.insert("kind".into(), json!(kind));
    report.body.insert("tolerance".into(), tolerance_json(&tol));
    Ok(report)
}

fn tolerance_json(t: &Tolerance) -> Value {
    json!({
        "tol_rank": num(t.tol_rank),
        "tol_orth": num(t.tol_orth),
        "tol_proj": num(t.tol_proj),
        "tol_eq": num(t.tol_eq),
        "tol_pd": num(t.tol_pd),
    })
}

fn core_err(ptr: &str) -> impl Fn(Error) -> InputError + '_ {
    move |e| InputError::at(ptr, e)
}

fn witnesses_json(rep: &IntersectionReport, poset: &Poset) -> Value {
    Value::Array(
        rep.witnesses
            .iter()
            .map(|w| {
                let mut m = Map::new();
                if let Some(alpha) = w.alpha {
                    m.insert("alpha".into(), json!(poset.label(alpha)));
                }
                m.insert("a".into(), json!(poset.label(w.a)));
                m.insert("b".into(), json!(poset.label(w.b)));
                m.insert("gap".into(), num(w.gap));
                Value::Object(m)
            })
            .collect(),
    )
}

fn intersection_json(rep: &IntersectionReport, poset: &Poset) -> Value {
    json!({
        "holds": rep.holds,
        "max_gap": num(rep.max_gap),
        "witnesses": witnesses_json(rep, poset),
    })
}

fn check_dim(dim: usize, limits: &Limits, ptr: &str) -> Result<(), InputError> {
    if dim > limits.max_dim {
        return Err(InputError::at(
            ptr,
            Error::AmbientTooLarge {
                dim,
                cap: limits.max_dim,
            },
        ));
    }
    Ok(())
}

fn model_from(spec: &ModelSpec, limits: &Limits, ptr: &str) -> Result<DiscreteModel, InputError> {
    let vars = spec
        .variables
        .iter()
        .map(|v| (v.name.clone(), v.states))
        .collect();
    DiscreteModel::new(vars, limits).map_err(core_err(ptr))
}

fn build_family(
    job: &FamilyJob,
    tol: Tolerance,
    limits: &Limits,
) -> Result<SubspaceFamily, InputError> {
    if let Some(model) = &job.factor_model {
        if job.poset.is_some() || job.generators.is_some() || job.gram.is_some() {
            return Err(InputError::at(
                "/factor_model",
                "`factor_model` excludes `poset`, `gram` and `generators`",
            ));
        }
        let model = model_from(model, limits, "/factor_model")?;
        check_dim(model.size(), limits, "/factor_model")?;
        return graphical::factor_family(&model, tol).map_err(core_err("/factor_model"));
    }
    let poset = job
        .poset
        .as_ref()
        .ok_or_else(|| InputError::at("/poset", "missing field `poset`"))?
        .build()
        .map_err(core_err("/poset"))?;
    let ambient = match (&job.gram, job.ambient_dim) {
        (Some(g), dim) => {
            let g = g.to_matrix().map_err(core_err("/gram"))?;
            if let Some(d) = dim {
                if d != g.nrows() {
                    return Err(InputError::at(
                        "/ambient_dim",
                        format!("ambient_dim {d} disagrees with the {}-row gram matrix", g.nrows()),
                    ));
                }
            }
            check_dim(g.nrows(), limits, "/gram")?;
            AmbientSpace::with_gram(g, tol).map_err(core_err("/gram"))?
        }
        (None, Some(d)) => {
            check_dim(d, limits, "/ambient_dim")?;
            AmbientSpace::euclidean(d, tol)
        }
        (None, None) => {
            return Err(InputError::at("/ambient_dim", "give `ambient_dim` or `gram`"));
        }
    };
    let n = ambient.dim();
    let given = job.generators.clone().unwrap_or_default();
    for label in given.keys() {
        poset
            .index_of(label)
            .map_err(|e| InputError::at(format!("/generators/{}", escape(label)), e))?;
    }
    let mut gens = Vec::with_capacity(poset.len());
    for a in 0..poset.len() {
        let label = poset.label(a);
        let vecs = given.get(label).cloned().unwrap_or_default();
        let mut m = DMatrix::zeros(n, vecs.len());
        for (j, v) in vecs.iter().enumerate() {
            if v.len() != n {
                return Err(InputError::at(
                    format!("/generators/{}/{j}", escape(label)),
                    format!("expected a vector of length {n}, found {}", v.len()),
                ));
            }
            m.set_column(j, &DVector::from_column_slice(v));
        }
        gens.push(m);
    }
    SubspaceFamily::from_generators(poset, ambient, &gens).map_err(core_err("/generators"))
}

fn run_family(
    job: FamilyJob,
    mode: Mode,
    tol: Tolerance,
    limits: &Limits,
) -> Result<Report, InputError> {
    let fam = build_family(&job, tol, limits)?;
    let poset = fam.poset();
    let mut body = Map::new();
    let rep = check_intersection_property(&fam);
    body.insert("ambient_dim".into(), json!(fam.ambient().dim()));
    body.insert("elements".into(), json!(poset.labels()));
    body.insert(
        "dims".into(),
        Value::Object(
            (0..poset.len())
                .map(|a| (poset.label(a).to_owned(), json!(fam.space(a).dim())))
                .collect(),
        ),
    );
    body.insert("intersection_property".into(), intersection_json(&rep, poset));
    if poset.is_meet_semilattice() {
        let sc = meet_semilattice_shortcut(&fam).map_err(core_err("/poset"))?;
        body.insert("meet_shortcut".into(), intersection_json(&sc, poset));
    }
    let mut pass = rep.holds;
    if mode == Mode::Decompose {
        let plus = poset.extend_plus();
        let label = |a: usize| plus.extended.label(a).to_owned();
        let pieces_json = |dims: &[usize]| {
            Value::Object(
                dims.iter()
                    .enumerate()
                    .map(|(a, &d)| (label(a), json!(d)))
                    .collect(),
            )
        };
        match decompose(&fam) {
            Ok(dec) => {
                body.insert("decomposable".into(), json!(true));
                body.insert("pieces".into(), pieces_json(&dec.dims()));
                body.insert("top".into(), json!(label(plus.top)));
                body.insert("max_overlap".into(), num(dec.max_overlap));
                body.insert("max_reconstruction_gap".into(), num(dec.max_reconstruction_gap));
                pass = true;
            }
            Err(f) => {
                let dims: Vec<usize> = f.pieces.iter().map(|s| s.dim()).collect();
                body.insert("decomposable".into(), json!(false));
                body.insert("pieces".into(), pieces_json(&dims));
                body.insert("top".into(), json!(label(plus.top)));
                body.insert("first_failure".into(), json!(label(f.first_failure)));
                let reason = match f.reason {
                    FailureReason::Overlap { b, c, gap } => json!({
                        "type": "overlap", "b": label(b), "c": label(c), "gap": num(gap)
                    }),
                    FailureReason::Reconstruction { gap, dims, expected } => json!({
                        "type": "reconstruction", "gap": num(gap), "dims": dims, "expected": expected
                    }),
                };
                body.insert("failure_reason".into(), reason);
                pass = false;
            }
        }
        let cmp = compare_projections(&fam);
        body.insert(
            "mobius_comparison".into(),
            json!({
                "max_difference": num(cmp.max_difference),
                "mobius_sum_gap": num(cmp.mobius_sum_gap),
                "orthogonal_sum_gap": num(cmp.orthogonal_sum_gap),
            }),
        );
    }
    body.insert("pass".into(), json!(pass));
    Ok(Report { pass, body })
}

fn build_diagram(job: &DiagramJob, tol: Tolerance, limits: &Limits) -> Result<IsometryDiagram, InputError> {
    let poset = job.poset.build().map_err(core_err("/poset"))?;
    for label in job.dims.keys() {
        poset
            .index_of(label)
            .map_err(|e| InputError::at(format!("/dims/{}", escape(label)), e))?;
    }
    let mut dims = Vec::with_capacity(poset.len());
    for a in 0..poset.len() {
        let d = *job.dims.get(poset.label(a)).ok_or_else(|| {
            InputError::at("/dims", format!("missing dimension for `{}`", poset.label(a)))
        })?;
        check_dim(d, limits, &format!("/dims/{}", escape(poset.label(a))))?;
        dims.push(d);
    }
    let mut edges = Vec::with_capacity(job.edges.len());
    for (key, m) in &job.edges {
        let ptr = format!("/edges/{}", escape(key));
        let (b, a) = key
            .split_once('<')
            .ok_or_else(|| InputError::at(&ptr, "edge keys have the form `b<a`"))?;
        let b = poset.index_of(b.trim()).map_err(core_err(&ptr))?;
        let a = poset.index_of(a.trim()).map_err(core_err(&ptr))?;
        edges.push(((b, a), m.to_matrix().map_err(core_err(&ptr))?));
    }
    poset
        .lower_sets(None, limits.max_lower_sets)
        .map_err(core_err("/poset"))?;
    IsometryDiagram::new(poset, dims, edges, tol).map_err(core_err("/edges"))
}

fn run_diagram(
    job: DiagramJob,
    mode: Mode,
    tol: Tolerance,
    limits: &Limits,
) -> Result<Report, InputError> {
    let d = build_diagram(&job, tol, limits)?;
    let poset = d.poset();
    let mut body = Map::new();
    let rep = check_intersection_property_functor(&d);
    body.insert("elements".into(), json!(poset.labels()));
    body.insert("intersection_property".into(), intersection_json(&rep, poset));
    let v = d.validation();
    body.insert(
        "validation".into(),
        json!({
            "max_isometry_deviation": num(v.max_isometry_deviation),
            "max_commutation_deviation": num(v.max_commutation_deviation),
        }),
    );
    let mut pass = rep.holds;
    if mode == Mode::Decompose {
        match decompose_functor(&d) {
            Ok(fd) => {
                body.insert("decomposable".into(), json!(true));
                body.insert(
                    "pieces".into(),
                    Value::Object(
                        fd.piece_dims()
                            .iter()
                            .enumerate()
                            .map(|(c, &k)| (poset.label(c).to_owned(), json!(k)))
                            .collect(),
                    ),
                );
                body.insert("max_orthogonality_deviation".into(), num(fd.max_orthogonality_deviation));
                body.insert("max_naturality_deviation".into(), num(fd.max_naturality_deviation));
                pass = true;
            }
            Err(f) => {
                body.insert("decomposable".into(), json!(false));
                let reason = match f.reason {
                    FunctorFailureReason::Fiber { alpha, .. } => {
                        json!({"type": "fiber", "alpha": poset.label(alpha)})
                    }
                    FunctorFailureReason::PieceTransport { c, a, gap } => json!({
                        "type": "piece_transport", "c": poset.label(c), "a": poset.label(a), "gap": num(gap)
                    }),
                    FunctorFailureReason::NotIsometric { a, deviation } => json!({
                        "type": "not_isometric", "a": poset.label(a), "deviation": num(deviation)
                    }),
                    FunctorFailureReason::NotNatural { b, a, deviation } => json!({
                        "type": "not_natural", "b": poset.label(b), "a": poset.label(a), "deviation": num(deviation)
                    }),
                };
                body.insert("failure_reason".into(), reason);
                pass = false;
            }
        }
    }
    body.insert("pass".into(), json!(pass));
    Ok(Report { pass, body })
}

fn run_gibbs(job: GibbsJob, tol: Tolerance, limits: &Limits) -> Result<Report, InputError> {
    let model = model_from(&job.model, limits, "/model")?;
    check_dim(model.size(), limits, "/model")?;
    if job.dist.len() != model.size() {
        return Err(InputError::at(
            "/dist",
            format!("expected {} probabilities, found {}", model.size(), job.dist.len()),
        ));
    }
    let probs = DVector::from_column_slice(&job.dist);
    let state = GibbsState::new(model.clone(), probs).map_err(|e| match e {
        Error::NonPositiveProbability { index, .. } => InputError::at(format!("/dist/{index}"), e),
        other => InputError::at("/dist", other),
    })?;
    let mut classes = Vec::with_capacity(job.classes.len());
    for (i, c) in job.classes.iter().enumerate() {
        classes.push(
            model
                .mask_of(c)
                .map_err(|e| InputError::at(format!("/classes/{i}"), e))?,
        );
    }
    let rel_tol = job.rel_tol.unwrap_or(DEFAULT_FACTOR_TOL);
    let fam = graphical::factor_family(&model, tol).map_err(core_err("/model"))?;
    let dec = decompose(&fam).map_err(|f| {
        InputError::at("/model", format!("factor family did not decompose (gap {:.3e})", f.report.max_gap))
    })?;
    let rep = graphical::factorization_test_with(&state, &classes, rel_tol, &dec)
        .map_err(core_err("/classes"))?;
    let poset = model.power_set();
    let norms: Vec<Value> = rep
        .norms
        .iter()
        .map(|n| {
            json!({
                "subset": poset.label(n.mask as usize),
                "in_model": n.in_model,
                "dim": dec.piece(n.mask as usize).dim(),
                "norm": num(n.norm),
            })
        })
        .collect();
    let mut body = Map::new();
    body.insert("interactions".into(), Value::Array(norms));
    body.insert("max_off_model".into(), num(rep.max_off_model));
    body.insert("threshold".into(), num(rep.threshold));
    body.insert("factorizes".into(), json!(rep.factorizes));
    body.insert("pass".into(), json!(rep.factorizes));
    Ok(Report {
        pass: rep.factorizes,
        body,
    })
}

fn run_chaos(job: ChaosJob, tol: Tolerance, limits: &Limits) -> Result<Report, InputError> {
    let names: Vec<String> = match &job.sites {
        Sites::Count(n) => (1..=*n).map(|i| format!("s{i}")).collect(),
        Sites::Names(v) => v.clone(),
    };
    let n = names.len();
    let cov = match &job.cov {
        Some(c) => c.to_matrix().map_err(core_err("/cov"))?,
        None => DMatrix::identity(n, n),
    };
    let model = GaussianModel::new(names, cov, tol).map_err(core_err("/cov"))?;
    let count = chaos::monomial_count(n, job.max_degree);
    check_dim(count, limits, "/max_degree")?;
    let space =
        chaos::chaos_filtration(&model, job.max_degree, limits, tol).map_err(core_err("/max_degree"))?;
    let pieces = chaos::chaos_pieces(&space).map_err(core_err("/cov"))?;
    let mut expansions = Vec::with_capacity(job.expand.len());
    for (i, text) in job.expand.iter().enumerate() {
        let ptr = format!("/expand/{i}");
        let x = Monomial::parse(&model, text).map_err(core_err(&ptr))?;
        let coeffs = chaos::hermite_ito_with(&space, &pieces, &x).map_err(core_err(&ptr))?;
        let terms: Vec<Value> = chaos::terms(&space, &coeffs, 1e-10)
            .into_iter()
            .map(|(m, c)| json!({"monomial": m.display(&model).to_string(), "coefficient": num(c)}))
            .collect();
        expansions.push(json!({
            "monomial": x.display(&model).to_string(),
            "degree": x.degree(),
            "terms": terms,
        }));
    }
    let mut body = Map::new();
    body.insert("sites".into(), json!(model.sites()));
    body.insert("max_degree".into(), json!(job.max_degree));
    body.insert("monomials".into(), json!(space.monomials().len()));
    body.insert(
        "level_dims".into(),
        json!((0..=job.max_degree).map(|m| space.level(m).dim()).collect::<Vec<_>>()),
    );
    body.insert(
        "piece_dims".into(),
        json!(pieces.iter().map(|p| p.dim()).collect::<Vec<_>>()),
    );
    body.insert("expansions".into(), Value::Array(expansions));
    body.insert("pass".into(), json!(true));
    Ok(Report { pass: true, body })
}
