//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use common::*;
use kloosterman::cyclotomic::CycloInt;
use kloosterman::dwork::{
    alpha0_matrix, horizontality_residual, scaled_connection, specialize_det_compare,
    FrobeniusPrecision, HorizontalityVariant,
};
use kloosterman::exact::{rat, ExactRat};
use kloosterman::gkz::{companion_matrix, picard_fuchs_operator};
use kloosterman::lfunction::{
    exp_sum_series, l_polynomial, newton_polygon, predict_sum, LPolynomial,
};
use kloosterman::newton_hodge::{basis_set, hodge_polygon, slope_multiset_ab, FamilyParams};
use kloosterman::poly::RatFunc;
use kloosterman::reduction::connection_on_flag_basis;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::time::{Duration, Instant};

type Check = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_families(rng: &mut StdRng, count: usize, max: u64, unit_cd: bool) -> Vec<FamilyParams> {
    let mut out = Vec::new();
    while out.len() < count {
        let a = rng.gen_range(1..=max);
        let b = rng.gen_range(1..=max);
        let (c, d) = if unit_cd {
            (1, 1)
        } else {
            (rng.gen_range(1..=max), rng.gen_range(1..=max))
        };
        if let Ok(f) = FamilyParams::new(a, b, c, d) {
            out.push(f);
        }
    }
    out
}

fn a1() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    for f in random_families(&mut rng, 50, 9, false) {
        let n = basis_set(&f).len();
        ensure(n == f.n(), || {
            format!("{f:?}: |basis| = {n}, N = {}", f.n())
        })?;
    }
    Ok(())
}

fn slopes(v: &[(i64, i64)]) -> Vec<ExactRat> {
    v.iter().map(|&(n, d)| rat(n, d)).collect()
}

fn a2() -> Check {
    let cases = [
        ((1, 1, 1, 1), slopes(&[(0, 1), (1, 1), (2, 1)])),
        (
            (2, 1, 1, 1),
            slopes(&[(0, 1), (1, 2), (1, 1), (3, 2), (2, 1)]),
        ),
        ((1, 1, 2, 1), slopes(&[(0, 1), (1, 1), (1, 1), (2, 1)])),
    ];
    for ((a, b, c, d), want) in cases {
        let got = hodge_polygon(&family(a, b, c, d)).slope_multiset();
        ensure(got == want, || format!("({a},{b},{c},{d}): {got:?}"))?;
    }
    let mut rng = StdRng::seed_from_u64(2);
    for f in random_families(&mut rng, 20, 9, true) {
        let got = hodge_polygon(&f).slope_multiset();
        let want = slope_multiset_ab(&f).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("{f:?}: {got:?} vs {want:?}"))?;
    }
    Ok(())
}

/// Sums `S_1..S_{N+1}`, L-polynomial from the first `N`, prediction of the last.
fn l_function_case(f: &FamilyParams, p: u64, lambda: u64) -> Result<LPolynomial, String> {
    let n = f.n();
    let s = exp_sum_series(f, p, lambda, n + 1, None).map_err(|e| e.to_string())?;
    let poly = l_polynomial(&s).map_err(|e| e.to_string())?;
    ensure(poly.degree() == n, || {
        format!("degree {} != {n}", poly.degree())
    })?;
    ensure(poly.coeffs[0] == CycloInt::one(p), || {
        "constant term is not 1".into()
    })?;
    let pred = predict_sum(&poly, n + 1).map_err(|e| e.to_string())?;
    ensure(pred == s.sums[n], || {
        format!("{f:?} lambda={lambda}: predicted S_{} differs", n + 1)
    })?;
    Ok(poly)
}

fn a3() -> Check {
    let f = family(1, 1, 1, 1);
    for lambda in [1, 2] {
        let poly = l_function_case(&f, 3, lambda)?;
        let np = newton_polygon(&poly, 1).map_err(|e| e.to_string())?;
        ensure(np == hodge_polygon(&f), || {
            format!("lambda={lambda}: NP {:?}", np.vertices())
        })?;
    }
    Ok(())
}

fn a4() -> Check {
    let f = family(2, 1, 1, 1);
    for lambda in [1, 2] {
        let poly = l_function_case(&f, 3, lambda)?;
        let np = newton_polygon(&poly, 1).map_err(|e| e.to_string())?;
        ensure(np == hodge_polygon(&f), || {
            format!("(2,1,1,1) lambda={lambda}: NP {:?}", np.vertices())
        })?;
    }
    let g = family(1, 1, 2, 1);
    for lambda in [1, 2] {
        let poly = l_function_case(&g, 3, lambda)?;
        let got = newton_polygon(&poly, 1)
            .map_err(|e| e.to_string())?
            .slope_multiset();
        let want = slopes(&[(0, 1), (1, 1), (1, 1), (2, 1)]);
        ensure(got == want, || {
            format!("(1,1,2,1) lambda={lambda}: slopes {got:?}")
        })?;
    }
    Ok(())
}

fn a5() -> Check {
    for (a, b, c, d) in FLAGSHIP {
        let f = family(a, b, c, d);
        let conn = connection_on_flag_basis(&f).map_err(|e| e.to_string())?;
        let comp = companion_matrix(&picard_fuchs_operator(&f)).map_err(|e| e.to_string())?;
        let comp: Vec<Vec<RatFunc>> = comp
            .into_iter()
            .map(|r| r.into_iter().map(RatFunc::from_poly).collect())
            .collect();
        ensure(conn.gt == comp, || {
            format!("({a},{b},{c},{d}): connection differs from companion")
        })?;
    }
    Ok(())
}

fn flagship_frobenius() -> Result<kloosterman::dwork::FrobMatrix, String> {
    let f = family(1, 1, 1, 1);
    let prec = FrobeniusPrecision {
        pi_prec: 8,
        w_max: 12,
        l_max: 12,
    };
    alpha0_matrix(&f, 3, prec).map_err(|e| e.to_string())
}

fn a6() -> Check {
    let f = family(1, 1, 1, 1);
    let u = flagship_frobenius()?;
    let ring = u.ring();
    let g = scaled_connection(&f, &ring).map_err(|e| e.to_string())?;
    let rep = horizontality_residual(&u.entries, &g, &ring, 4, 10).map_err(|e| e.to_string())?;
    ensure(rep.vanishes(HorizontalityVariant::Stated), || {
        format!("residual valuations {:?}", rep.min_valuation)
    })
}

fn a7() -> Check {
    let f = family(1, 1, 1, 1);
    let u = flagship_frobenius()?;
    let poly = l_function_case(&f, 3, 1)?;
    let c = specialize_det_compare(&u, 1, &poly, 4).map_err(|e| e.to_string())?;
    ensure(c.agree, || format!("det {:?} vs {:?}", c.det, c.embedded))
}

fn run_prop<S: proptest::strategy::Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
) -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn a8() -> Check {
    use proptest::prelude::*;
    run_prop(
        "m-subadditivity",
        (any_family(9), any_point(30), any_point(30)),
        |(f, u, v)| m_subadditive(&f, u, v),
    )?;
    run_prop(
        "certificates over F_p",
        (
            any_family(4),
            prop::sample::select(vec![5u64, 7, 11, 13]),
            1u64..13,
            any_point(8),
            any_point(8),
            0u64..100,
            0u64..100,
        ),
        |(f, p, l, u, v, s, t)| certificate_linear_fp(&f, p, l, u, v, s, t),
    )?;
    run_prop(
        "certificates over Q(L)",
        (
            any_family(3),
            any_point(4),
            any_point(4),
            -5i64..5,
            -5i64..5,
        ),
        |(f, u, v, s, t)| certificate_linear_q(&f, u, v, s, t),
    )?;
    run_prop(
        "smith form and kernel",
        (
            prop::sample::select(vec![(2usize, 3usize), (2, 4), (3, 4), (3, 3), (2, 2)]),
            prop::collection::vec(-12i64..12, 12),
        ),
        |((r, c), e)| snf_and_kernel(r, c, &e),
    )?;
    run_prop("relation lattice", any_family(12), |f| lattice_matches(&f))?;
    run_prop(
        "splitting valuation bound",
        (prop::sample::select(vec![3u64, 5]), 0usize..=30),
        |(p, i)| theta_bound(p, i),
    )?;
    run_prop("newton above hodge", small_case(), |(f, p, l)| {
        newton_above_hodge(&f, p, l)
    })?;
    run_prop("formal solutions", (0usize..3, 1usize..9), |(w, o)| {
        solutions_vanish(w, o)
    })?;
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 8] = [
        ("A1", a1, Duration::from_secs(1)),
        ("A2", a2, Duration::from_secs(1)),
        ("A3", a3, Duration::from_secs(10)),
        ("A4", a4, Duration::from_secs(120)),
        ("A5", a5, Duration::from_secs(30)),
        ("A6", a6, Duration::from_secs(600)),
        ("A7", a7, Duration::from_secs(600)),
        ("A8", a8, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (id, check, limit) in criteria {
        let start = Instant::now();
        let res = check();
        let took = start.elapsed();
        let res =
            res.and_then(|_| ensure(took <= limit, || format!("took {took:?}, limit {limit:?}")));
        match res {
            Ok(()) => println!("{id} PASS ({:.3}s)", took.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("{id} FAIL ({:.3}s): {e}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
