//! Problem specifications: a TOML schema parsed by hand so every error can
//! name its location, and an emitter whose output parses back to the same
//! spec.

use std::fmt;
use std::path::Path;

use radon_weights::field::{PolyMap, VectorField};
use radon_weights::poly::Polynomial;
use radon_weights::scalar::{format_rational, parse_rational};
use radon_weights::systems::System;
use radon_weights::tolerances::Tolerances;
use radon_weights::words::{Degree, Word, WordTuple};
use radon_weights::Rational;
use toml::{Table, Value};

type P = Polynomial<Rational>;

#[derive(Clone, Debug, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecErrors(pub Vec<SchemaError>);

impl fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", if e.path.is_empty() { "<root>" } else { &e.path }, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecErrors {}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Submersions(Vec<Vec<P>>),
    Fields(Vec<Vec<P>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Unweighted,
    Rho,
    RhoTilde,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Unweighted => "unweighted",
            WeightKind::Rho => "rho",
            WeightKind::RhoTilde => "rho_tilde",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "unweighted" => Some(WeightKind::Unweighted),
            "rho" => Some(WeightKind::Rho),
            "rho_tilde" => Some(WeightKind::RhoTilde),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    Bounded,
    Blowup,
}

impl Expectation {
    pub fn name(self) -> &'static str {
        match self {
            Expectation::Bounded => "bounded",
            Expectation::Blowup => "blowup",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub deltas: Vec<Rational>,
    /// Words of the tuple defining the balls.
    pub ball: Vec<Vec<u16>>,
    pub v0: Option<Vec<Rational>>,
    pub samples: usize,
    pub steps: u64,
    pub image_resolution: usize,
    pub quadrature_resolution: usize,
    pub domain_factor: Rational,
    pub weights: Vec<(WeightKind, Option<Expectation>)>,
    /// Exponent of `|x − x0|` multiplying the weight in the optimality
    /// sanity inversion, which must then fail.
    pub singular_exponent: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffeoSpec {
    pub f: Vec<P>,
    pub g: Vec<Vec<P>>,
    pub points: Vec<Vec<Rational>>,
    /// Whether the identity is expected to hold.
    pub expect_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub dimension: usize,
    pub k: usize,
    pub input: Input,
    pub cutoff: Option<Vec<(Rational, Rational)>>,
    pub base_point: Option<Vec<Rational>>,
    pub samples: Vec<Vec<Rational>>,
    pub degree_bound: Option<u32>,
    pub jet_order: Option<u32>,
    pub b0: Option<Vec<u32>>,
    pub i0: Option<Vec<Vec<u16>>>,
    pub j0: Option<Vec<u16>>,
    pub beta0: Option<Vec<u32>>,
    pub exponents: Option<Vec<Rational>>,
    pub closed_form: Option<Vec<Vec<u32>>>,
    pub seed: u64,
    pub sweep: Option<SweepSpec>,
    pub diffeo: Option<DiffeoSpec>,
    pub tolerances: Tolerances,
}

impl ProblemSpec {
    pub fn base_point(&self) -> Vec<Rational> {
        self.base_point.clone().unwrap_or_else(|| vec![Rational::from_integer(0.into()); self.dimension])
    }

    pub fn b0(&self) -> Option<Degree> {
        self.b0.clone().map(Degree)
    }

    pub fn i0(&self) -> Option<WordTuple> {
        self.i0.as_ref().map(|ws| WordTuple::new(ws.iter().map(|w| Word::from_letters(w)).collect()))
    }

    pub fn system(&self) -> radon_weights::Result<System> {
        let d = self.dimension;
        let mut sys = match &self.input {
            Input::Submersions(maps) => {
                let pis = maps.iter().map(|m| PolyMap::new(d, m.clone())).collect::<radon_weights::Result<Vec<_>>>()?;
                System::from_submersions(&self.name, d, pis)?
            }
            Input::Fields(fs) => {
                let fields = fs.iter().map(|c| VectorField::new(c.clone())).collect::<radon_weights::Result<Vec<_>>>()?;
                System::from_fields(&self.name, fields)?
            }
        };
        if let Some(c) = &self.cutoff {
            sys = sys.with_cutoff(c.clone())?;
        }
        if let Some(cf) = &self.closed_form {
            sys = sys.with_closed_form(cf.iter().cloned().map(Degree).collect());
        }
        Ok(sys)
    }
}

const TOP_KEYS: &[&str] = &[
    "name",
    "dimension",
    "k",
    "mode",
    "submersions",
    "fields",
    "cutoff",
    "base_point",
    "samples",
    "degree_bound",
    "jet_order",
    "b0",
    "i0",
    "j0",
    "beta0",
    "exponents",
    "closed_form",
    "seed",
    "sweep",
    "diffeo",
    "tolerances",
];
const SWEEP_KEYS: &[&str] = &[
    "deltas",
    "ball",
    "v0",
    "samples",
    "steps",
    "image_resolution",
    "quadrature_resolution",
    "domain_factor",
    "weights",
    "expect",
    "singular_exponent",
];
const DIFFEO_KEYS: &[&str] = &["f", "g", "points", "expect"];

struct Reader {
    errors: Vec<SchemaError>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

impl Reader {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(SchemaError { path: path.to_string(), message: message.into() });
    }

    fn keys(&mut self, t: &Table, path: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(&join(path, k), "unknown key");
            }
        }
    }

    fn string(&mut self, v: &Value, path: &str) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            other => {
                self.err(path, format!("expected a string, found {}", type_name(other)));
                None
            }
        }
    }

    fn uint(&mut self, v: &Value, path: &str) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.err(path, format!("expected a nonnegative integer, found {i}"));
                None
            }
            other => {
                self.err(path, format!("expected an integer, found {}", type_name(other)));
                None
            }
        }
    }

    fn rational(&mut self, v: &Value, path: &str) -> Option<Rational> {
        match v {
            Value::String(s) => match parse_rational(s) {
                Ok(q) => Some(q),
                Err(e) => {
                    self.err(path, format!("{e}"));
                    None
                }
            },
            Value::Integer(i) => Some(Rational::from_integer((*i).into())),
            Value::Float(x) => {
                self.err(path, format!("float literal {x} where a rational is required; write it as a string such as \"1/2\""));
                None
            }
            other => {
                self.err(path, format!("expected a rational string, found {}", type_name(other)));
                None
            }
        }
    }

    fn array<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Vec<Value>> {
        match v {
            Value::Array(a) => Some(a),
            other => {
                self.err(path, format!("expected an array, found {}", type_name(other)));
                None
            }
        }
    }

    fn table<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Table> {
        match v {
            Value::Table(t) => Some(t),
            other => {
                self.err(path, format!("expected a table, found {}", type_name(other)));
                None
            }
        }
    }

    fn list<T>(&mut self, v: &Value, path: &str, mut f: impl FnMut(&mut Self, &Value, &str) -> Option<T>) -> Option<Vec<T>> {
        let a = self.array(v, path)?;
        let mut out = Vec::with_capacity(a.len());
        let mut ok = true;
        for (i, x) in a.iter().enumerate() {
            match f(self, x, &index(path, i)) {
                Some(y) => out.push(y),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn rationals(&mut self, v: &Value, path: &str) -> Option<Vec<Rational>> {
        self.list(v, path, |r, x, p| r.rational(x, p))
    }

    fn u32s(&mut self, v: &Value, path: &str) -> Option<Vec<u32>> {
        self.list(v, path, |r, x, p| r.uint(x, p).and_then(|n| r.fits_u32(n, p)))
    }

    fn fits_u32(&mut self, n: u64, path: &str) -> Option<u32> {
        u32::try_from(n).ok().or_else(|| {
            self.err(path, "value too large");
            None
        })
    }

    fn word(&mut self, v: &Value, path: &str, k: usize) -> Option<Vec<u16>> {
        let w = self.list(v, path, |r, x, p| {
            let n = r.uint(x, p)?;
            if n == 0 || n as usize > k {
                r.err(p, format!("letter {n} outside 1..={k}"));
                return None;
            }
            Some(n as u16)
        })?;
        if w.is_empty() {
            self.err(path, "empty word");
            return None;
        }
        Some(w)
    }

    fn polynomial(&mut self, v: &Value, path: &str, nvars: usize) -> Option<P> {
        let terms = self.list(v, path, |r, x, p| {
            let t = r.table(x, p)?;
            r.keys(t, p, &["exp", "coef"]);
            let exp = match t.get("exp") {
                Some(e) => r.u32s(e, &join(p, "exp"))?,
                None => {
                    r.err(p, "missing key 'exp'");
                    return None;
                }
            };
            if exp.len() != nvars {
                r.err(&join(p, "exp"), format!("expected {nvars} exponents, found {}", exp.len()));
                return None;
            }
            let coef = match t.get("coef") {
                Some(c) => r.rational(c, &join(p, "coef"))?,
                None => {
                    r.err(p, "missing key 'coef'");
                    return None;
                }
            };
            Some((exp, coef))
        })?;
        match P::from_terms(nvars, terms) {
            Ok(p) => Some(p),
            Err(e) => {
                self.err(path, e.to_string());
                None
            }
        }
    }

    fn poly_list(&mut self, v: &Value, path: &str, nvars: usize) -> Option<Vec<P>> {
        self.list(v, path, |r, x, p| r.polynomial(x, p, nvars))
    }

    fn point(&mut self, v: &Value, path: &str, d: usize) -> Option<Vec<Rational>> {
        let p = self.rationals(v, path)?;
        if p.len() != d {
            self.err(path, format!("expected {d} coordinates, found {}", p.len()));
            return None;
        }
        Some(p)
    }
}

pub fn parse_spec_str(text: &str) -> Result<ProblemSpec, SpecErrors> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        SpecErrors(vec![SchemaError { path: String::new(), message: format!("invalid TOML: {}", e.message()) }])
    })?;
    let mut r = Reader { errors: Vec::new() };
    r.keys(&root, "", TOP_KEYS);

    let name = match root.get("name") {
        Some(v) => r.string(v, "name").unwrap_or_default(),
        None => "unnamed".to_string(),
    };
    let dimension = match root.get("dimension") {
        Some(v) => r.uint(v, "dimension").unwrap_or(0) as usize,
        None => {
            r.err("dimension", "missing");
            0
        }
    };
    if root.contains_key("dimension") && dimension == 0 {
        r.err("dimension", "must be positive");
    }
    let mode = root.get("mode").and_then(|v| r.string(v, "mode"));
    let input = match mode.as_deref() {
        Some("submersions") => {
            if root.contains_key("fields") {
                r.err("fields", "not allowed when mode = \"submersions\"");
            }
            root.get("submersions").and_then(|v| {
                r.list(v, "submersions", |r, x, p| {
                    let t = r.table(x, p)?;
                    r.keys(t, p, &["components"]);
                    let comps = match t.get("components") {
                        Some(c) => r.poly_list(c, &join(p, "components"), dimension)?,
                        None => {
                            r.err(p, "missing key 'components'");
                            return None;
                        }
                    };
                    if dimension > 0 && comps.len() != dimension - 1 {
                        r.err(&join(p, "components"), format!("a submersion needs {} components, found {}", dimension - 1, comps.len()));
                        return None;
                    }
                    Some(comps)
                })
                .map(Input::Submersions)
            })
        }
        Some("fields") => {
            if root.contains_key("submersions") {
                r.err("submersions", "not allowed when mode = \"fields\"");
            }
            root.get("fields").and_then(|v| {
                r.list(v, "fields", |r, x, p| {
                    let t = r.table(x, p)?;
                    r.keys(t, p, &["components"]);
                    let comps = match t.get("components") {
                        Some(c) => r.poly_list(c, &join(p, "components"), dimension)?,
                        None => {
                            r.err(p, "missing key 'components'");
                            return None;
                        }
                    };
                    if comps.len() != dimension {
                        r.err(&join(p, "components"), format!("a field needs {dimension} components, found {}", comps.len()));
                        return None;
                    }
                    Some(comps)
                })
                .map(Input::Fields)
            })
        }
        Some(other) => {
            r.err("mode", format!("expected \"submersions\" or \"fields\", found \"{other}\""));
            None
        }
        None => {
            r.err("mode", "missing");
            None
        }
    };
    // counted from the raw array so a bad entry does not also report k
    let data_len = match mode.as_deref() {
        Some(m @ ("submersions" | "fields")) => match root.get(m) {
            Some(Value::Array(a)) => Some(a.len()),
            Some(_) => None,
            None => {
                r.err(m, "missing");
                None
            }
        },
        _ => None,
    };
    let k = match root.get("k") {
        Some(v) => r.uint(v, "k").map(|n| n as usize),
        None => data_len,
    };
    let k = k.unwrap_or(0);
    if k < 2 {
        r.err("k", format!("need at least two maps or fields, found k = {k}"));
    }
    if let Some(n) = data_len {
        if n != k {
            r.err("k", format!("k = {k} but {n} maps or fields are given"));
        }
    }
    let d = dimension;
    let cutoff = root.get("cutoff").and_then(|v| {
        let c = r.list(v, "cutoff", |r, x, p| {
            let pair = r.rationals(x, p)?;
            if pair.len() != 2 {
                r.err(p, "expected [lo, hi]");
                return None;
            }
            if pair[0] >= pair[1] {
                r.err(p, "empty interval");
                return None;
            }
            Some((pair[0].clone(), pair[1].clone()))
        })?;
        if c.len() != d {
            r.err("cutoff", format!("expected {d} intervals, found {}", c.len()));
            return None;
        }
        Some(c)
    });
    let base_point = root.get("base_point").and_then(|v| r.point(v, "base_point", d));
    let samples = root
        .get("samples")
        .and_then(|v| r.list(v, "samples", |r, x, p| r.point(x, p, d)))
        .unwrap_or_default();
    let degree_bound = root.get("degree_bound").and_then(|v| r.uint(v, "degree_bound")).map(|n| n as u32);
    let jet_order = root.get("jet_order").and_then(|v| r.uint(v, "jet_order")).map(|n| n as u32);
    if jet_order == Some(0) {
        r.err("jet_order", "must be at least 1");
    }
    let degree_vec = |r: &mut Reader, key: &str| {
        root.get(key).and_then(|v| {
            let b = r.u32s(v, key)?;
            if b.len() != k {
                r.err(key, format!("expected {k} entries, found {}", b.len()));
                return None;
            }
            Some(b)
        })
    };
    let b0 = degree_vec(&mut r, "b0");
    let i0 = root.get("i0").and_then(|v| {
        let ws = r.list(v, "i0", |r, x, p| r.word(x, p, k))?;
        if ws.len() != d {
            r.err("i0", format!("expected {d} words, found {}", ws.len()));
            return None;
        }
        Some(ws)
    });
    let j0 = root.get("j0").and_then(|v| {
        let w = r.word(v, "j0", k)?;
        if w.len() != d {
            r.err("j0", format!("expected {d} letters, found {}", w.len()));
            return None;
        }
        Some(w)
    });
    let beta0 = root.get("beta0").and_then(|v| {
        let b = r.u32s(v, "beta0")?;
        if b.len() != d {
            r.err("beta0", format!("expected {d} entries, found {}", b.len()));
            return None;
        }
        Some(b)
    });
    if j0.is_some() != beta0.is_some() {
        r.err(if j0.is_some() { "beta0" } else { "j0" }, "j0 and beta0 must be given together");
    }
    let exponents = root.get("exponents").and_then(|v| {
        let p = r.rationals(v, "exponents")?;
        if p.len() != k {
            r.err("exponents", format!("expected {k} entries, found {}", p.len()));
            return None;
        }
        Some(p)
    });
    let closed_form = root.get("closed_form").and_then(|v| {
        r.list(v, "closed_form", |r, x, p| {
            let b = r.u32s(x, p)?;
            if b.len() != k {
                r.err(p, format!("expected {k} entries, found {}", b.len()));
                return None;
            }
            Some(b)
        })
    });
    let seed = root.get("seed").and_then(|v| r.uint(v, "seed")).unwrap_or(0);
    let sweep = root.get("sweep").and_then(|v| parse_sweep(&mut r, v, d, k));
    let diffeo = root.get("diffeo").and_then(|v| parse_diffeo(&mut r, v, d, k));
    let tolerances = match root.get("tolerances") {
        Some(v) => parse_tolerances(&mut r, v, "tolerances"),
        None => Tolerances::default(),
    };

    if !r.errors.is_empty() {
        return Err(SpecErrors(r.errors));
    }
    Ok(ProblemSpec {
        name,
        dimension,
        k,
        input: input.expect("checked"),
        cutoff,
        base_point,
        samples,
        degree_bound,
        jet_order,
        b0,
        i0,
        j0,
        beta0,
        exponents,
        closed_form,
        seed,
        sweep,
        diffeo,
        tolerances,
    })
}

fn parse_tolerances(r: &mut Reader, v: &Value, path: &str) -> Tolerances {
    if let Some(t) = r.table(v, path) {
        for (key, x) in t {
            if let Value::Integer(_) = x {
                continue;
            }
            if !matches!(x, Value::Float(_)) {
                r.err(&join(path, key), format!("expected a number, found {}", type_name(x)));
            }
        }
        match Value::Table(t.clone()).try_into::<Tolerances>() {
            Ok(tol) => return tol,
            Err(e) => r.err(path, e.message().to_string()),
        }
    }
    Tolerances::default()
}

/// Reads a standalone tolerance file.
pub fn parse_tolerances_str(text: &str) -> Result<Tolerances, SpecErrors> {
    let v: Table = text.parse().map_err(|e: toml::de::Error| {
        SpecErrors(vec![SchemaError { path: String::new(), message: format!("invalid TOML: {}", e.message()) }])
    })?;
    let mut r = Reader { errors: Vec::new() };
    let tol = parse_tolerances(&mut r, &Value::Table(v), "");
    if r.errors.is_empty() {
        Ok(tol)
    } else {
        Err(SpecErrors(r.errors))
    }
}

fn parse_sweep(r: &mut Reader, v: &Value, _d: usize, k: usize) -> Option<SweepSpec> {
    let t = r.table(v, "sweep")?;
    r.keys(t, "sweep", SWEEP_KEYS);
    let deltas = match t.get("deltas") {
        Some(x) => r.rationals(x, "sweep.deltas")?,
        None => {
            r.err("sweep.deltas", "missing");
            return None;
        }
    };
    if let Some(i) = deltas.iter().position(|q| *q <= Rational::from_integer(0.into())) {
        r.err(&index("sweep.deltas", i), "δ must be positive");
    }
    let ball = match t.get("ball") {
        Some(x) => r.list(x, "sweep.ball", |r, y, p| r.word(y, p, k))?,
        None => {
            r.err("sweep.ball", "missing");
            return None;
        }
    };
    let v0 = t.get("v0").and_then(|x| r.rationals(x, "sweep.v0"));
    let get_uint = |r: &mut Reader, key: &str, default: u64| {
        t.get(key).and_then(|x| r.uint(x, &format!("sweep.{key}"))).unwrap_or(default)
    };
    let samples = get_uint(r, "samples", 100_000) as usize;
    let steps = get_uint(r, "steps", 16);
    let image_resolution = get_uint(r, "image_resolution", 64) as usize;
    let quadrature_resolution = get_uint(r, "quadrature_resolution", 32) as usize;
    let domain_factor = t.get("domain_factor").and_then(|x| r.rational(x, "sweep.domain_factor")).unwrap_or(Rational::from_integer(2.into()));
    let names = match t.get("weights") {
        Some(x) => r.list(x, "sweep.weights", |r, y, p| {
            let s = r.string(y, p)?;
            WeightKind::parse(&s).or_else(|| {
                r.err(p, format!("unknown weight \"{s}\"; expected unweighted, rho or rho_tilde"));
                None
            })
        })?,
        None => vec![WeightKind::Rho],
    };
    let expect = t.get("expect").and_then(|x| r.table(x, "sweep.expect")).cloned().unwrap_or_default();
    for key in expect.keys() {
        if WeightKind::parse(key).is_none_or(|w| !names.contains(&w)) {
            r.err(&format!("sweep.expect.{key}"), "not one of the sweep weights");
        }
    }
    let weights = names
        .into_iter()
        .map(|w| {
            let e = expect.get(w.name()).and_then(|x| {
                let p = format!("sweep.expect.{}", w.name());
                match r.string(x, &p)?.as_str() {
                    "bounded" => Some(Expectation::Bounded),
                    "blowup" => Some(Expectation::Blowup),
                    other => {
                        r.err(&p, format!("expected \"bounded\" or \"blowup\", found \"{other}\""));
                        None
                    }
                }
            });
            (w, e)
        })
        .collect();
    let singular_exponent = t.get("singular_exponent").and_then(|x| r.rational(x, "sweep.singular_exponent"));
    Some(SweepSpec {
        deltas,
        ball,
        v0,
        samples,
        steps,
        image_resolution,
        quadrature_resolution,
        domain_factor,
        weights,
        singular_exponent,
    })
}

fn parse_diffeo(r: &mut Reader, v: &Value, d: usize, k: usize) -> Option<DiffeoSpec> {
    let t = r.table(v, "diffeo")?;
    r.keys(t, "diffeo", DIFFEO_KEYS);
    let f = match t.get("f") {
        Some(x) => r.poly_list(x, "diffeo.f", d)?,
        None => {
            r.err("diffeo.f", "missing");
            return None;
        }
    };
    if f.len() != d {
        r.err("diffeo.f", format!("expected {d} components, found {}", f.len()));
    }
    let g = match t.get("g") {
        Some(x) => r.list(x, "diffeo.g", |r, y, p| {
            let m = r.poly_list(y, p, d.saturating_sub(1))?;
            if m.len() + 1 != d {
                r.err(p, format!("expected {} components, found {}", d - 1, m.len()));
                return None;
            }
            Some(m)
        })?,
        None => {
            r.err("diffeo.g", "missing");
            return None;
        }
    };
    if g.len() != k {
        r.err("diffeo.g", format!("expected {k} maps, found {}", g.len()));
    }
    let points = match t.get("points") {
        Some(x) => r.list(x, "diffeo.points", |r, y, p| r.point(y, p, d))?,
        None => {
            r.err("diffeo.points", "missing");
            return None;
        }
    };
    let expect_holds = match t.get("expect").map(|x| r.string(x, "diffeo.expect")) {
        None => true,
        Some(Some(s)) if s == "holds" => true,
        Some(Some(s)) if s == "fails" => false,
        Some(Some(s)) => {
            r.err("diffeo.expect", format!("expected \"holds\" or \"fails\", found \"{s}\""));
            true
        }
        Some(None) => true,
    };
    Some(DiffeoSpec { f, g, points, expect_holds })
}

pub fn parse_spec(path: &Path) -> Result<ProblemSpec, SpecErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        SpecErrors(vec![SchemaError { path: String::new(), message: format!("cannot read {}: {e}", path.display()) }])
    })?;
    parse_spec_str(&text)
}

fn q(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

fn qs(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(q).collect())
}

fn ints<T: Copy + Into<i64>>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::Integer(x.into())).collect())
}

fn poly(p: &P) -> Value {
    Value::Array(
        p.terms()
            .map(|(e, c)| {
                let mut t = Table::new();
                t.insert("exp".into(), ints(e));
                t.insert("coef".into(), q(c));
                Value::Table(t)
            })
            .collect(),
    )
}

fn polys(ps: &[P]) -> Value {
    Value::Array(ps.iter().map(poly).collect())
}

fn words(ws: &[Vec<u16>]) -> Value {
    Value::Array(ws.iter().map(|w| ints(w)).collect())
}

/// TOML text that parses back to `spec`.
pub fn emit_spec(spec: &ProblemSpec) -> String {
    let mut t = Table::new();
    t.insert("name".into(), Value::String(spec.name.clone()));
    t.insert("dimension".into(), Value::Integer(spec.dimension as i64));
    t.insert("k".into(), Value::Integer(spec.k as i64));
    let (mode, maps) = match &spec.input {
        Input::Submersions(m) => ("submersions", m),
        Input::Fields(m) => ("fields", m),
    };
    t.insert("mode".into(), Value::String(mode.into()));
    t.insert(
        mode.into(),
        Value::Array(
            maps.iter()
                .map(|m| {
                    let mut c = Table::new();
                    c.insert("components".into(), polys(m));
                    Value::Table(c)
                })
                .collect(),
        ),
    );
    if let Some(c) = &spec.cutoff {
        t.insert("cutoff".into(), Value::Array(c.iter().map(|(a, b)| qs(&[a.clone(), b.clone()])).collect()));
    }
    if let Some(p) = &spec.base_point {
        t.insert("base_point".into(), qs(p));
    }
    if !spec.samples.is_empty() {
        t.insert("samples".into(), Value::Array(spec.samples.iter().map(|p| qs(p)).collect()));
    }
    if let Some(n) = spec.degree_bound {
        t.insert("degree_bound".into(), Value::Integer(n as i64));
    }
    if let Some(m) = spec.jet_order {
        t.insert("jet_order".into(), Value::Integer(m as i64));
    }
    if let Some(b) = &spec.b0 {
        t.insert("b0".into(), ints(b));
    }
    if let Some(i) = &spec.i0 {
        t.insert("i0".into(), words(i));
    }
    if let Some(j) = &spec.j0 {
        t.insert("j0".into(), ints(j));
    }
    if let Some(b) = &spec.beta0 {
        t.insert("beta0".into(), ints(b));
    }
    if let Some(p) = &spec.exponents {
        t.insert("exponents".into(), qs(p));
    }
    if let Some(cf) = &spec.closed_form {
        t.insert("closed_form".into(), Value::Array(cf.iter().map(|b| ints(b)).collect()));
    }
    t.insert("seed".into(), Value::Integer(spec.seed as i64));
    if let Some(s) = &spec.sweep {
        let mut w = Table::new();
        w.insert("deltas".into(), qs(&s.deltas));
        w.insert("ball".into(), words(&s.ball));
        if let Some(v) = &s.v0 {
            w.insert("v0".into(), qs(v));
        }
        w.insert("samples".into(), Value::Integer(s.samples as i64));
        w.insert("steps".into(), Value::Integer(s.steps as i64));
        w.insert("image_resolution".into(), Value::Integer(s.image_resolution as i64));
        w.insert("quadrature_resolution".into(), Value::Integer(s.quadrature_resolution as i64));
        w.insert("domain_factor".into(), q(&s.domain_factor));
        w.insert("weights".into(), Value::Array(s.weights.iter().map(|(k, _)| Value::String(k.name().into())).collect()));
        let mut e = Table::new();
        for (k, x) in &s.weights {
            if let Some(x) = x {
                e.insert(k.name().into(), Value::String(x.name().into()));
            }
        }
        if !e.is_empty() {
            w.insert("expect".into(), Value::Table(e));
        }
        if let Some(x) = &s.singular_exponent {
            w.insert("singular_exponent".into(), q(x));
        }
        t.insert("sweep".into(), Value::Table(w));
    }
    if let Some(df) = &spec.diffeo {
        let mut w = Table::new();
        w.insert("f".into(), polys(&df.f));
        w.insert("g".into(), Value::Array(df.g.iter().map(|m| polys(m)).collect()));
        w.insert("points".into(), Value::Array(df.points.iter().map(|p| qs(p)).collect()));
        w.insert("expect".into(), Value::String(if df.expect_holds { "holds" } else { "fails" }.into()));
        t.insert("diffeo".into(), Value::Table(w));
    }
    t.insert("tolerances".into(), Value::try_from(&spec.tolerances).expect("plain numbers"));
    toml::to_string(&t).expect("serializable table")
}
