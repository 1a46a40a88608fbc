//! Command-line front end. Every subcommand prints one JSON document (keys
//! sorted) holding its result fields next to `job` and `provenance`; the
//! `job.argv` array reproduces the run.

use crate::cyclotomic::CycloInt;
use crate::dwork::{
    alpha0_matrix, horizontality_residual, scaled_connection, specialize_det_compare, FrobBasis,
    FrobeniusPrecision, HorizontalityVariant,
};
use crate::error::{Error, Result};
use crate::exact::{rat_string, ExactRat, RationalPolygon};
use crate::gkz::{
    apply_operator, companion_matrix, formal_solutions, gkz_operators, indicial_roots,
    picard_fuchs_operator,
};
use crate::lfunction::{
    exp_sum_series, has_unit_constant, l_polynomial, newton_polygon, predict_sum,
};
use crate::newton_hodge::{
    basis_set, hodge_polygon, ordinarity_report, weight_of, weight_profile, FamilyParams,
    LatticePoint,
};
use crate::padic::{LamPoly, PiAdicScalar};
use crate::poly::RatFunc;
use crate::reduction::{
    connection_on_flag_basis, reduce_to_basis, verify_certificate, CohomClass, PrimeFieldScalars,
    RationalFunctionScalars, ScalarRing,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

const MODULES: [&str; 9] = [
    "exact-core",
    "finite-field",
    "cyclotomic",
    "lfunction",
    "newton-hodge",
    "reduction",
    "gkz-ode",
    "dwork-frobenius",
    "cli",
];

#[derive(Parser, Debug)]
#[command(
    name = "kloosterman",
    version,
    about = "Exact computations for x1^a + x2^b + L/(x1^c x2^d)"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct Family {
    #[arg(long)]
    a: u64,
    #[arg(long)]
    b: u64,
    #[arg(long)]
    c: u64,
    #[arg(long)]
    d: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Table,
}

#[derive(Args, Debug, Clone)]
struct Specialisation {
    #[arg(long)]
    p: u64,
    /// One or more values, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<u64>,
}

#[derive(Args, Debug, Clone)]
struct FrobFlags {
    /// Working π-precision.
    #[arg(long)]
    pi_prec: Option<u32>,
    #[arg(long)]
    w_max: Option<i64>,
    #[arg(long)]
    l_max: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cohomology basis and weights.
    Basis(Family),
    /// Hodge polygon.
    Hodge(Family),
    /// Ordinarity data for a prime.
    Ordinary {
        #[command(flatten)]
        fam: Family,
        #[arg(long)]
        p: u64,
    },
    /// Exponential sums S_1..S_k.
    Sums {
        #[command(flatten)]
        fam: Family,
        #[command(flatten)]
        spec: Specialisation,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// L-polynomial from S_1..S_N.
    Lpoly {
        #[command(flatten)]
        fam: Family,
        #[command(flatten)]
        spec: Specialisation,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Newton polygon of the L-polynomial.
    Newton {
        #[command(flatten)]
        fam: Family,
        #[command(flatten)]
        spec: Specialisation,
    },
    /// Newton polygon against Hodge polygon.
    ComparePolygons {
        #[command(flatten)]
        fam: Family,
        #[command(flatten)]
        spec: Specialisation,
    },
    /// Reduce x^(v1,v2) to the basis, over Q(L) or over F_p when --p and --lambda are given.
    Reduce {
        #[command(flatten)]
        fam: Family,
        #[arg(long, allow_hyphen_values = true)]
        v1: i64,
        #[arg(long, allow_hyphen_values = true)]
        v2: i64,
        #[arg(long, requires = "lambda")]
        p: Option<u64>,
        #[arg(long, requires = "p")]
        lambda: Option<u64>,
    },
    /// Matrix of D_L on the flag basis.
    Connection(Family),
    /// GKZ lattice, Picard-Fuchs operator and companion matrix.
    Gkz(Family),
    /// Frobenius-method solutions at L = 0.
    OdeSolve {
        #[command(flatten)]
        fam: Family,
        /// Number of L-powers per solution (default 4N).
        #[arg(long)]
        order: Option<usize>,
    },
    /// Truncated Frobenius matrix U(L).
    Frobenius {
        #[command(flatten)]
        fam: Family,
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        prec: FrobFlags,
    },
    /// Horizontality residual and determinant comparison.
    FrobeniusCheck {
        #[command(flatten)]
        fam: Family,
        #[command(flatten)]
        spec: Specialisation,
        #[command(flatten)]
        prec: FrobFlags,
        /// Target π-precision of both checks.
        #[arg(long, default_value_t = 4)]
        target: u32,
        /// L-degree up to which the residual is inspected.
        #[arg(long, default_value_t = 10)]
        lam_check: usize,
    },
}

/// Fully resolved inputs of one run.
#[derive(Clone, Debug, Serialize)]
pub struct JobSpec {
    pub subcommand: String,
    pub params: FamilyParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monomial: Option<(i64, i64)>,
    /// Named truncation parameters after defaults are filled in.
    pub precisions: BTreeMap<String, i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub format: Format,
}

impl JobSpec {
    fn new(subcommand: &str, fam: &Family) -> Result<Self> {
        let params = FamilyParams::new(fam.a, fam.b, fam.c, fam.d)
            .map_err(|e| Error::Precondition(e.to_string()))?;
        Ok(JobSpec {
            subcommand: subcommand.into(),
            params,
            p: None,
            lambda: Vec::new(),
            k: None,
            monomial: None,
            precisions: BTreeMap::new(),
            workers: None,
            format: fam.format,
        })
    }

    /// Arguments that reproduce this job.
    pub fn argv(&self) -> Vec<String> {
        let mut v = vec![self.subcommand.clone()];
        let mut flag = |k: &str, x: String| {
            v.push(format!("--{k}"));
            v.push(x);
        };
        let f = &self.params;
        flag("a", f.a.to_string());
        flag("b", f.b.to_string());
        flag("c", f.c.to_string());
        flag("d", f.d.to_string());
        if let Some(p) = self.p {
            flag("p", p.to_string());
        }
        if !self.lambda.is_empty() {
            let l: Vec<String> = self.lambda.iter().map(|x| x.to_string()).collect();
            flag("lambda", l.join(","));
        }
        if let Some(k) = self.k {
            flag("k", k.to_string());
        }
        if let Some((x, y)) = self.monomial {
            flag("v1", x.to_string());
            flag("v2", y.to_string());
        }
        for (k, x) in &self.precisions {
            flag(&k.replace('_', "-"), x.to_string());
        }
        if let Some(w) = self.workers {
            flag("workers", w.to_string());
        }
        flag(
            "format",
            match self.format {
                Format::Json => "json".into(),
                Format::Table => "table".into(),
            },
        );
        v
    }
}

/// Exit code and captured streams of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (without the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("kloosterman"))
        .chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match build_job(cli.cmd).and_then(|job| execute(&job).map(|r| (job, r))) {
        Ok((job, (result, code))) => Outcome {
            code,
            stdout: render(&job, result),
            stderr: if code == 0 {
                String::new()
            } else {
                "check failed\n".into()
            },
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn frob_precisions(job: &mut JobSpec, p: u64, f: &FrobFlags) {
    let d = FrobeniusPrecision::defaults(&job.params, p);
    job.precisions
        .insert("pi_prec".into(), f.pi_prec.unwrap_or(d.pi_prec) as i64);
    job.precisions
        .insert("w_max".into(), f.w_max.unwrap_or(d.w_max));
    job.precisions
        .insert("l_max".into(), f.l_max.unwrap_or(d.l_max) as i64);
}

fn build_job(cmd: Command) -> Result<JobSpec> {
    Ok(match cmd {
        Command::Basis(f) => JobSpec::new("basis", &f)?,
        Command::Hodge(f) => JobSpec::new("hodge", &f)?,
        Command::Connection(f) => JobSpec::new("connection", &f)?,
        Command::Gkz(f) => JobSpec::new("gkz", &f)?,
        Command::Ordinary { fam, p } => JobSpec {
            p: Some(p),
            ..JobSpec::new("ordinary", &fam)?
        },
        Command::Sums {
            fam,
            spec,
            k,
            workers,
        } => JobSpec {
            p: Some(spec.p),
            lambda: spec.lambda,
            k: Some(k),
            workers,
            ..JobSpec::new("sums", &fam)?
        },
        Command::Lpoly { fam, spec, workers } => JobSpec {
            p: Some(spec.p),
            lambda: spec.lambda,
            workers,
            ..JobSpec::new("lpoly", &fam)?
        },
        Command::Newton { fam, spec } => JobSpec {
            p: Some(spec.p),
            lambda: spec.lambda,
            ..JobSpec::new("newton", &fam)?
        },
        Command::ComparePolygons { fam, spec } => JobSpec {
            p: Some(spec.p),
            lambda: spec.lambda,
            ..JobSpec::new("compare-polygons", &fam)?
        },
        Command::Reduce {
            fam,
            v1,
            v2,
            p,
            lambda,
        } => JobSpec {
            p,
            lambda: lambda.into_iter().collect(),
            monomial: Some((v1, v2)),
            ..JobSpec::new("reduce", &fam)?
        },
        Command::OdeSolve { fam, order } => {
            let mut j = JobSpec::new("ode-solve", &fam)?;
            let order = order.unwrap_or(4 * j.params.n());
            j.precisions.insert("order".into(), order as i64);
            j
        }
        Command::Frobenius { fam, p, prec } => {
            let mut j = JobSpec {
                p: Some(p),
                ..JobSpec::new("frobenius", &fam)?
            };
            frob_precisions(&mut j, p, &prec);
            j
        }
        Command::FrobeniusCheck {
            fam,
            spec,
            prec,
            target,
            lam_check,
        } => {
            let mut j = JobSpec {
                p: Some(spec.p),
                lambda: spec.lambda,
                ..JobSpec::new("frobenius-check", &fam)?
            };
            frob_precisions(&mut j, spec.p, &prec);
            j.precisions.insert("target".into(), target as i64);
            j.precisions.insert("lam_check".into(), lam_check as i64);
            j
        }
    })
}

fn render(job: &JobSpec, result: Map<String, Value>) -> String {
    let mut doc = result;
    let mut modules = Map::new();
    for m in MODULES {
        modules.insert(m.into(), json!(env!("CARGO_PKG_VERSION")));
    }
    let mut jobv = serde_json::to_value(job).expect("job serialises");
    jobv["argv"] = json!(job.argv());
    doc.insert("job".into(), jobv);
    doc.insert(
        "provenance".into(),
        json!({"modules": modules, "precisions": job.precisions}),
    );
    match job.format {
        Format::Json => format!("{}\n", Value::Object(doc)),
        Format::Table => {
            let w = doc.keys().map(|k| k.len()).max().unwrap_or(0);
            doc.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
        }
    }
}

fn big_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(x) => json!(x),
        None => json!(n.to_string()),
    }
}

/// Integral rationals as numbers, others as `"n/d"`.
fn num_or_rat(r: &ExactRat) -> Value {
    if r.is_integer() {
        big_json(&r.to_integer())
    } else {
        json!(rat_string(r))
    }
}

fn cyclo_json(x: &CycloInt) -> Value {
    json!({"zeta_p": x.p(), "coeffs": x.coeffs().iter().map(big_json).collect::<Vec<_>>()})
}

fn padic_json(x: &PiAdicScalar) -> Value {
    json!({"pi_digits": x.pi_digits(), "pi_relation": "pi^(p-1)=-p", "precision": x.prec()})
}

fn lampoly_json(x: &LamPoly) -> Value {
    Value::Array(x.coeffs.iter().map(padic_json).collect())
}

fn polygon_json(poly: &RationalPolygon) -> (Value, Value) {
    let slopes = poly
        .slopes()
        .iter()
        .map(|(s, len)| json!([rat_string(s), num_or_rat(len)]))
        .collect();
    let verts = poly
        .vertices()
        .iter()
        .map(|(x, y)| json!([num_or_rat(x), num_or_rat(y)]))
        .collect();
    (Value::Array(slopes), Value::Array(verts))
}

fn point_json(v: &LatticePoint) -> Value {
    json!([v.v1, v.v2])
}

fn need_p(job: &JobSpec) -> Result<u64> {
    job.p
        .ok_or_else(|| Error::Precondition("--p is required".into()))
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("result documents are objects"),
    }
}

fn execute(job: &JobSpec) -> Result<(Map<String, Value>, i32)> {
    let f = &job.params;
    let ok = |v: Value| Ok((obj(v), 0));
    match job.subcommand.as_str() {
        "basis" => {
            let b = basis_set(f);
            let prof = weight_profile(f);
            ok(json!({
                "N": b.len(),
                "basis": b.points.iter().map(point_json).collect::<Vec<_>>(),
                "weights": b.points.iter().map(|v| rat_string(&weight_of(f, v))).collect::<Vec<_>>(),
                "weight_profile": prof,
            }))
        }
        "hodge" => {
            let (slopes, vertices) = polygon_json(&hodge_polygon(f));
            ok(json!({"N": f.n(), "slopes": slopes, "vertices": vertices}))
        }
        "ordinary" => {
            let r = ordinarity_report(f, need_p(job)?)
                .map_err(|e| Error::Precondition(e.to_string()))?;
            ok(serde_json::to_value(r).expect("report serialises"))
        }
        "sums" => {
            let p = need_p(job)?;
            let k = job.k.unwrap_or(0);
            let mut rows = Vec::new();
            for &l in &job.lambda {
                let s = exp_sum_series(f, p, l, k, job.workers)?;
                rows.push(
                    json!({"lambda": l, "sums": s.sums.iter().map(cyclo_json).collect::<Vec<_>>()}),
                );
            }
            ok(json!({"results": rows}))
        }
        "lpoly" => {
            let p = need_p(job)?;
            let mut rows = Vec::new();
            for &l in &job.lambda {
                let s = exp_sum_series(f, p, l, f.n(), job.workers)?;
                let poly = l_polynomial(&s)?;
                let roundtrip = (1..=f.n())
                    .all(|k| predict_sum(&poly, k).ok().as_ref() == Some(&s.sums[k - 1]));
                rows.push(json!({
                    "lambda": l,
                    "degree": poly.degree(),
                    "coeffs": poly.coeffs.iter().map(cyclo_json).collect::<Vec<_>>(),
                    "unit_constant": has_unit_constant(&poly),
                    "sums_reproduced": roundtrip,
                }));
            }
            ok(json!({"results": rows}))
        }
        "newton" | "compare-polygons" => {
            let p = need_p(job)?;
            let hodge = hodge_polygon(f);
            let mut rows = Vec::new();
            let mut all = true;
            for &l in &job.lambda {
                let poly = l_polynomial(&exp_sum_series(f, p, l, f.n(), job.workers)?)?;
                let np = newton_polygon(&poly, 1)?;
                let (slopes, vertices) = polygon_json(&np);
                let equal = np == hodge;
                all &= equal;
                rows.push(json!({"lambda": l, "slopes": slopes, "vertices": vertices, "equal_to_hodge": equal}));
            }
            if job.subcommand == "newton" {
                ok(json!({"results": rows}))
            } else {
                let (hs, hv) = polygon_json(&hodge);
                ok(json!({"equal": all, "hodge": {"slopes": hs, "vertices": hv}, "results": rows}))
            }
        }
        "reduce" => {
            let (v1, v2) = job.monomial.expect("reduce carries a monomial");
            let v = LatticePoint::new(v1, v2);
            match (job.p, job.lambda.first()) {
                (Some(p), Some(&l)) => {
                    let ring = PrimeFieldScalars::new(f, p, l)?;
                    let (coords, verified) = reduce_with(&ring, v)?;
                    ok(json!({
                        "ring": format!("F_{p}"),
                        "coords": coords.iter().map(|(b, c)| json!({"basis": point_json(b), "coeff": c})).collect::<Vec<_>>(),
                        "certificate_verified": verified,
                    }))
                }
                _ => {
                    let ring = RationalFunctionScalars::new(f);
                    let (coords, verified) = reduce_with(&ring, v)?;
                    ok(json!({
                        "ring": "Q(L)",
                        "coords": coords.iter().map(|(b, c): &(LatticePoint, RatFunc)| json!({"basis": point_json(b), "coeff": c.render()})).collect::<Vec<_>>(),
                        "certificate_verified": verified,
                    }))
                }
            }
        }
        "connection" => {
            let c = connection_on_flag_basis(f)?;
            let m = |x: &[Vec<RatFunc>]| {
                x.iter()
                    .map(|r| r.iter().map(|e| e.render()).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            };
            ok(
                json!({"gt": m(&c.gt), "flag_matrix": m(&c.flag_matrix), "flag_det": c.flag_det.render()}),
            )
        }
        "gkz" => {
            let sys = gkz_operators(f)?;
            let op = picard_fuchs_operator(f);
            let comp = companion_matrix(&op)?;
            let a = &sys.a_matrix;
            ok(json!({
                "lattice": sys.box_exponents.iter().map(big_json).collect::<Vec<_>>(),
                "a_matrix": (0..a.rows()).map(|r| a.row(r).iter().map(big_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "picard_fuchs": op.render(),
                "order": op.order(),
                "indicial_roots": indicial_roots(f).iter().map(rat_string).collect::<Vec<_>>(),
                "companion": comp.iter().map(|r| r.iter().map(|q| q.render("L")).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }))
        }
        "ode-solve" => {
            let order = job.precisions["order"] as usize;
            let op = picard_fuchs_operator(f);
            let sols = formal_solutions(&op, order)?;
            let zero = sols
                .iter()
                .all(|s| apply_operator(&op, s).iter().all(|q| q.is_zero()));
            let rows: Vec<Value> = sols
                .iter()
                .map(|s| {
                    json!({
                        "rho": rat_string(&s.rho),
                        "log_degree": s.log_degree(),
                        "coeffs": s.coeffs.iter().map(|((i, j), c)| json!([i, j, rat_string(c)])).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let code = if zero { 0 } else { 4 };
            Ok((
                obj(json!({"operator": op.render(), "solutions": rows, "residual_zero": zero})),
                code,
            ))
        }
        "frobenius" => {
            let p = need_p(job)?;
            let u = alpha0_matrix(f, p, frob_prec(job))?;
            let m = |x: &[Vec<LamPoly>]| {
                x.iter()
                    .map(|r| r.iter().map(lampoly_json).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            };
            ok(json!({
                "N": u.n(),
                "basis": basis_name(u.basis),
                "certified_precision": u.certified_prec,
                "U": m(&u.entries),
                "monomial_matrix": m(&u.monomial_entries),
            }))
        }
        "frobenius-check" => {
            let p = need_p(job)?;
            let target = job.precisions["target"] as u32;
            let lam = job.precisions["lam_check"] as usize;
            let u = alpha0_matrix(f, p, frob_prec(job))?;
            if target > u.certified_prec {
                return Err(Error::Starvation(format!(
                    "target pi^{target} exceeds certified pi^{}; raise --pi-prec or --w-max",
                    u.certified_prec
                )));
            }
            let ring = u.ring();
            // horizontality is a statement about the flag basis with an
            // integrally rescaled connection
            let horizontal = if u.basis == FrobBasis::Flag && f.lambda_weight().is_integer() {
                let g = scaled_connection(f, &ring)?;
                let rep = horizontality_residual(&u.entries, &g, &ring, target, lam)?;
                let mut variants = Map::new();
                for v in HorizontalityVariant::ALL {
                    variants.insert(v.name().into(), json!(rep.min_valuation[&v]));
                }
                let names: Vec<&str> = rep.vanishing_variants().iter().map(|v| v.name()).collect();
                Some((
                    json!({"min_valuation": variants, "vanishing_variants": names, "target": target, "lam_check": lam}),
                    rep.vanishes(HorizontalityVariant::Stated),
                ))
            } else {
                None
            };
            let mut all = horizontal.as_ref().is_none_or(|h| h.1);
            let mut dets = Vec::new();
            for &l in &job.lambda {
                let poly = l_polynomial(&exp_sum_series(f, p, l, f.n(), None)?)?;
                let c = specialize_det_compare(&u, l, &poly, target)?;
                all &= c.agree;
                dets.push(json!({
                    "lambda": l,
                    "agree": c.agree,
                    "det": c.det.iter().map(padic_json).collect::<Vec<_>>(),
                    "lpoly_embedded": c.embedded.iter().map(padic_json).collect::<Vec<_>>(),
                }));
            }
            Ok((
                obj(json!({
                    "ok": all,
                    "basis": basis_name(u.basis),
                    "horizontality": horizontal.map(|h| h.0),
                    "determinant": dets,
                })),
                if all { 0 } else { 4 },
            ))
        }
        other => Err(Error::Precondition(format!("unknown subcommand {other}"))),
    }
}

fn basis_name(b: FrobBasis) -> &'static str {
    match b {
        FrobBasis::Flag => "flag",
        FrobBasis::Monomial => "monomial",
    }
}

fn frob_prec(job: &JobSpec) -> FrobeniusPrecision {
    FrobeniusPrecision {
        pi_prec: job.precisions["pi_prec"] as u32,
        w_max: job.precisions["w_max"],
        l_max: job.precisions["l_max"] as usize,
    }
}

fn reduce_with<R: ScalarRing>(
    ring: &R,
    v: LatticePoint,
) -> Result<(Vec<(LatticePoint, R::Elem)>, bool)> {
    let h = CohomClass::monomial(ring, v, ring.one());
    let cert = reduce_to_basis(&h, ring)?;
    let ok = verify_certificate(&cert, &h, ring);
    Ok((cert.coords.clone().into_iter().collect(), ok))
}
