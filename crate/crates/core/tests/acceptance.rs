//! Acceptance checks, one line per criterion. Run with `cargo test --test acceptance`.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fixture_suite, map};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use padyn::arith::{int, rat, rational_valuation};
use padyn::dynamics::{analyze_map, AnalyticMap, DiophantineParams, DEFAULT_EXPONENT_BOUND};
use padyn::eisenstein::{coefficients_up_to, denominator_support, AlgebraicSeriesSpec};
use padyn::linearize::{check_norm_bound, conjugacy_residual, linearize_newton, linearize_order_by_order, solve_homological, C1Value};
use padyn::orbit::{
    closure_dimension_estimate, iterate_in_neighbourhood, relation_probe, separating_polynomial, union_closure_compare, vanishing_exponents,
    KernelPair, Neighbourhood, VanishingSumInstance,
};
use padyn::series::gauss_norm;
use padyn::{MultiIndex, QSeries, Rational, Rationals, SeriesTuple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e < limit, || format!("{what} took {e:.2?}, limit {limit:?}"))
}

fn conjugacy_identity() -> Check {
    let mut lines = Vec::new();
    for (name, f) in fixture_suite(12) {
        let t = Instant::now();
        let res = linearize_order_by_order(&f, 12).map_err(|e| format!("{name}: {e}"))?;
        let residual = conjugacy_residual(&f, &res.h, &res.lambda).map_err(|e| e.to_string())?;
        ensure(residual.is_zero() && res.verified_degree == 12, || format!("{name}: nonzero residual"))?;
        within(t, Duration::from_secs(5), name)?;
        lines.push(format!("{name} {:.0?}", t.elapsed()));
    }
    Ok(format!("{} maps, residual 0 through 12 [{}]", lines.len(), lines.join(", ")))
}

fn closed_form() -> Check {
    let f = map(1, 12, 0, &[&[(&[1], int(2)), (&[2], int(1))]]);
    let res = linearize_order_by_order(&f, 12).map_err(|e| e.to_string())?;
    let mut factorial = BigInt::one();
    for k in 1..=12u32 {
        factorial *= k;
        let c = res.h.component(0).coeff(&MultiIndex::new(vec![k]));
        let expect = Rational::new(BigInt::one(), factorial.clone());
        ensure(c == expect, || format!("coefficient {k}: {c} != {expect}"))?;
    }
    Ok("h_k = 1/k! for k <= 12".into())
}

/// Fixtures whose linearizing conjugacy is a polynomial converge in one exact step.
fn newton_equivalence() -> Check {
    let mut lines = Vec::new();
    for (name, f) in fixture_suite(16) {
        let a = linearize_order_by_order(&f, 16).map_err(|e| format!("{name}: {e}"))?;
        let (b, trace) = linearize_newton(&f, 16, &DiophantineParams::default(), None).map_err(|e| format!("{name}: {e}"))?;
        ensure(a.h == b.h, || format!("{name}: Newton and order-by-order differ"))?;
        let through: Vec<u32> = trace.iterations.iter().map(|i| i.verified_through).collect();
        for (i, &t) in through.iter().enumerate() {
            ensure(t >= (2u32 << i).min(16), || format!("{name}: verified through {through:?}"))?;
        }
        ensure(through.last() == Some(&16), || format!("{name}: stopped at {through:?}"))?;
        let polynomial = a.h.components().iter().all(|c| c.max_degree().is_some_and(|d| d < 16));
        if !polynomial {
            ensure(through == [2, 4, 8, 16], || format!("{name}: expected 2,4,8,16, got {through:?}"))?;
        }
        lines.push(format!("{name} {through:?}"));
    }
    Ok(lines.join(", "))
}

fn random_ar_tuple(rng: &mut ChaCha8Rng, n: usize, r: usize, trunc: u32) -> SeriesTuple<Rationals> {
    let monos: Vec<MultiIndex> = (2..=trunc).flat_map(|d| MultiIndex::all_of_degree(n, d)).filter(|i| i.tail_degree(r) >= 2).collect();
    let comps = (0..n)
        .map(|_| {
            let mut s = QSeries::q_zero(n, trunc);
            for m in &monos {
                if rng.gen_bool(0.6) {
                    s.add_to_coeff(m.clone(), &int(rng.gen_range(-9..=9)));
                }
            }
            s
        })
        .collect();
    SeriesTuple::new(comps).unwrap()
}

/// `max_I |g_I| |λ^I - λ_j|^{-1} (1/2)^{|I|} / ‖g‖_1`: the `w` part of the bound, from the coefficients alone.
fn divisor_oracle(g: &SeriesTuple<Rationals>, lambda: &[Rational], p: u64) -> Rational {
    let abs = |x: &Rational| padyn::arith::padic_abs(x, p);
    let mut g_norm = Rational::zero();
    let mut best = Rational::zero();
    for (j, c) in g.components().iter().enumerate() {
        for (i, a) in c.terms() {
            g_norm = g_norm.max(abs(a));
            let li = i.exponents().iter().zip(lambda).fold(int(1), |acc, (&e, l)| acc * num_traits::pow(l.clone(), e as usize));
            let v = abs(a) / abs(&(li - &lambda[j])) * padyn::arith::rational_pow(&rat(1, 2), i.degree() as i64);
            best = best.max(v);
        }
    }
    best / g_norm
}

fn norm_bound() -> Check {
    let t = Instant::now();
    let lambda = [int(1), int(-2), int(-2)];
    let params = DiophantineParams::new(int(1), int(0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x15);
    let mut values = Vec::new();
    for k in 0..100 {
        let g = random_ar_tuple(&mut rng, 3, 1, 8);
        let w = solve_homological(&g, &lambda, 1).map_err(|e| e.to_string())?;
        let cert = check_norm_bound(&g, &w, &lambda, 3, &int(1), &rat(1, 2), &params).map_err(|e| e.to_string())?;
        let C1Value::Exact(c1) = cert.min_c1 else { return Err(format!("instance {k}: non-exact C1")) };
        let oracle = divisor_oracle(&g, &lambda, 3);
        ensure(c1 >= oracle, || format!("instance {k}: C1 {c1} below the coefficient bound {oracle}"))?;
        values.push(c1);
    }
    let max50 = values[..50].iter().max().unwrap().clone();
    let max100 = values.iter().max().unwrap().clone();
    ensure(max50 == max100, || format!("max C1 moved from {max50} to {max100} when the batch doubled"))?;
    within(t, Duration::from_secs(10), "batch")?;
    Ok(format!("max C1 = {max50} over 50 and over 100 instances"))
}

fn random_integral_map(rng: &mut ChaCha8Rng, p: u64) -> AnalyticMap {
    let n = rng.gen_range(1..=3);
    let deg = rng.gen_range(1..=3);
    let monos: Vec<MultiIndex> = (1..=deg).flat_map(|d| MultiIndex::all_of_degree(n, d)).collect();
    let comps = (0..n)
        .map(|_| {
            let mut s = QSeries::q_zero(n, 3);
            for m in &monos {
                if rng.gen_bool(0.5) {
                    // p-integral: denominators prime to p
                    let mut den = rng.gen_range(1..=6);
                    while den % p as i64 == 0 {
                        den += 1;
                    }
                    s.add_to_coeff(m.clone(), &rat(rng.gen_range(-20..=20), den));
                }
            }
            s
        })
        .collect();
    AnalyticMap::new(SeriesTuple::new(comps).unwrap(), 0).unwrap()
}

fn neighbourhood_invariance() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x22);
    let mut iterates = 0usize;
    for k in 0..1000 {
        let p = [3u64, 5, 7][rng.gen_range(0..3)];
        let f = random_integral_map(&mut rng, p);
        let s = rng.gen_range(1..=2u32);
        let q = (p as i64).pow(s);
        let start: Vec<Rational> = (0..f.dim())
            .map(|_| {
                let mut den = rng.gen_range(1..=9);
                while den % p as i64 == 0 {
                    den += 1;
                }
                rat(rng.gen_range(-50..=50) * q, den)
            })
            .collect();
        let nb = Neighbourhood::new(p, s, f.dim()).unwrap();
        let x0 = nb.point(&start, 32).map_err(|e| e.to_string())?;
        let rep = iterate_in_neighbourhood(&f, &nb, &x0, 50).map_err(|e| format!("map {k}: {e}"))?;
        for pt in &rep.points {
            ensure(nb.contains(pt), || format!("map {k}: left the neighbourhood"))?;
            for (c, c0) in pt.iter().zip(&x0) {
                ensure(c.residue(s) == c0.residue(s), || format!("map {k}: residue changed"))?;
            }
        }
        iterates += rep.points.len() - 1;
    }
    within(t, Duration::from_secs(30), "1000 orbits")?;
    Ok(format!("1000 maps, {iterates} iterates, 0 failures"))
}

fn eisenstein_sqrt() -> Check {
    let t = Instant::now();
    let spec = AlgebraicSeriesSpec::univariate(&[(0, 2, int(1)), (0, 0, int(-1)), (1, 0, int(-1))], &[int(1)]).map_err(|e| e.to_string())?;
    let phi = coefficients_up_to(&spec, 199).map_err(|e| e.to_string())?;
    // binomial(1/2, k) by c_{k+1} = c_k (1/2 - k) / (k + 1)
    let mut c = int(1);
    for k in 0..200i64 {
        let got = phi.coeff(&MultiIndex::new(vec![k as u32]));
        ensure(got == c, || format!("coefficient {k}: {got} != {c}"))?;
        c = c * (rat(1, 2) - int(k)) / int(k + 1);
    }
    let support = denominator_support(&phi);
    ensure(support.primes == BTreeSet::from([BigUint::from(2u32)]), || format!("support {:?}", support.primes))?;
    within(t, Duration::from_secs(2), "200 coefficients")?;
    Ok(format!("200 coefficients exact, support {{2}}, {:.0?}", t.elapsed()))
}

/// Instances with planted zeros: one for two terms, two for three terms.
fn planted_instance(rng: &mut ChaCha8Rng, p: u64) -> (Vec<Rational>, Vec<Rational>, Vec<u64>) {
    loop {
        let n = rng.gen_range(2..=3);
        let mut b: BTreeSet<i64> = BTreeSet::new();
        while b.len() < n {
            let x = rng.gen_range(-12i64..=12);
            if x != 0 && x.rem_euclid(p as i64) != 0 {
                b.insert(x);
            }
        }
        let b: Vec<Rational> = b.into_iter().map(int).collect();
        let pw = |x: &Rational, s: u64| num_traits::pow(x.clone(), s as usize);
        let s0 = rng.gen_range(1..=8u64);
        let s1 = s0 + rng.gen_range(1..=6u64);
        let a = if n == 2 {
            vec![pw(&b[1], s0), -pw(&b[0], s0)]
        } else {
            // a_0 = 1; solve a_1, a_2 from the two planted equations
            let (m11, m12, r1) = (pw(&b[1], s0), pw(&b[2], s0), -pw(&b[0], s0));
            let (m21, m22, r2) = (pw(&b[1], s1), pw(&b[2], s1), -pw(&b[0], s1));
            let det = &m11 * &m22 - &m12 * &m21;
            if det.is_zero() {
                continue;
            }
            vec![int(1), (&r1 * &m22 - &m12 * &r2) / &det, (&m11 * &r2 - &r1 * &m21) / &det]
        };
        if a.iter().any(|x| x.is_zero()) {
            continue;
        }
        let planted = if n == 2 { vec![s0] } else { vec![s0, s1] };
        return (a, b, planted);
    }
}

fn vanishing_sums() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x26);
    let mut total_zeros = 0;
    let mut separators = 0;
    for k in 0..20 {
        let p = [3u64, 5, 7, 11][rng.gen_range(0..4)];
        let (a, b, planted) = planted_instance(&mut rng, p);
        let inst = VanishingSumInstance::new(a.clone(), b.clone(), p, 32).map_err(|e| format!("instance {k}: {e}"))?;
        let rep = vanishing_exponents(&inst, 200).map_err(|e| format!("instance {k}: {e}"))?;
        let brute: BTreeSet<u64> = (1..=200u64)
            .filter(|&s| a.iter().zip(&b).map(|(ai, bi)| ai * num_traits::pow(bi.clone(), s as usize)).sum::<Rational>().is_zero())
            .collect();
        ensure(planted.iter().all(|s| brute.contains(s)), || format!("instance {k}: planted zero missing"))?;
        ensure(rep.zeros == brute, || format!("instance {k}: {:?} != brute force {:?}", rep.zeros, brute))?;
        total_zeros += brute.len();
        for target in 0..b.len() {
            let sep = separating_polynomial(&b, target, 1, p).map_err(|e| e.to_string())?;
            let q = BigInt::from(p).pow(sep.level);
            let vt = rational_valuation(&sep.eval(&b[target]), p).ok_or("target is a root")?;
            for x in &b {
                let class = (x.numer() % &q + &q) % &q;
                let vx = rational_valuation(&sep.eval(x), p);
                let ok = if class == sep.target_class { vx == Some(vt) } else { vx.is_none_or(|v| v > vt) };
                ensure(ok && sep.verified, || format!("instance {k}: separating polynomial fails at {x}"))?;
            }
            separators += 1;
        }
    }
    Ok(format!("20 instances, {total_zeros} zeros, brute force agrees; {separators} separating polynomials verified"))
}

fn diagonal_orbit(lambda: &[i64], count: usize) -> Vec<Vec<Rational>> {
    (0..count).map(|k| lambda.iter().map(|&l| num_traits::pow(int(l), k)).collect()).collect()
}

fn relation_probes() -> Check {
    let t = Instant::now();
    let res = relation_probe(&diagonal_orbit(&[2, 4], 20), 2);
    // y2 - y1^2 in the basis 1, y1, y2, y1^2, y1 y2, y2^2
    let idx = |e: &[u32]| res.monomials.iter().position(|m| m.exponents() == e).unwrap();
    ensure(res.kernel.len() == 1, || format!("(2,4): kernel dimension {}", res.kernel.len()))?;
    let v = &res.kernel[0];
    let scale = v[idx(&[0, 1])].clone();
    ensure(!scale.is_zero(), || "(2,4): no y2 term".into())?;
    let mut expect = vec![int(0); v.len()];
    expect[idx(&[0, 1])] = int(1);
    expect[idx(&[2, 0])] = int(-1);
    ensure(v.iter().map(|c| c / &scale).collect::<Vec<_>>() == expect, || format!("(2,4): kernel {v:?}"))?;
    let res23 = relation_probe(&diagonal_orbit(&[2, 3], 60), 4);
    ensure(res23.is_empty(), || "(2,3): nonempty kernel".into())?;
    let e24 = closure_dimension_estimate(&[int(2), int(4)], &[int(1), int(1)], 20, 2).map_err(|e| e.to_string())?;
    let e23 = closure_dimension_estimate(&[int(2), int(3)], &[int(1), int(1)], 60, 4).map_err(|e| e.to_string())?;
    ensure(e24.lower_bound == 1 && e23.lower_bound == 2, || format!("bounds {} and {}", e24.lower_bound, e23.lower_bound))?;
    within(t, Duration::from_secs(5), "probes")?;
    Ok("kernel spanned by y2 - y1^2; (2,3) kernel empty at d = 4; bounds 1 and 2".into())
}

fn union_compare() -> Check {
    let f = map(2, 3, 0, &[&[(&[1, 0], int(2))], &[(&[0, 1], int(3))]]);
    let ys = vec![vec![int(1), int(1)], vec![int(1), int(-2)]];
    let even: Vec<u64> = (0..40).step_by(2).collect();
    let odd: Vec<u64> = (1..40).step_by(2).collect();
    let cmp = union_closure_compare(&f, &ys, &even, &odd, 3, 5, 32).map_err(|e| e.to_string())?;
    let KernelPair::Exact(k1, k2) = &cmp.kernels else { return Err("expected exact kernels for a linear map".into()) };
    ensure(cmp.equal, || format!("kernels differ: {} vs {} relations", k1.kernel.len(), k2.kernel.len()))?;
    Ok(format!("even and odd unions share {} relations of degree <= 3", k1.kernel.len()))
}

fn symplectic_fixture() -> Check {
    let (_, f) = fixture_suite(4).into_iter().find(|(n, _)| n.starts_with("diag")).unwrap();
    let rep = analyze_map(&f, 4, DEFAULT_EXPONENT_BOUND).map_err(|e| e.to_string())?;
    let mut sigma = vec![vec![int(0); 4]; 4];
    for i in 0..2 {
        sigma[i][i + 2] = int(1);
        sigma[i + 2][i] = int(-1);
    }
    let s = padyn::dynamics::symplectic_scaling_check(&rep.jacobian, &sigma, &int(-2)).map_err(|e| e.to_string())?;
    ensure(s.holds && s.scaling == int(-2), || "scaling -2 not confirmed".into())?;
    let wrong = padyn::dynamics::symplectic_scaling_check(&rep.jacobian, &sigma, &int(2)).map_err(|e| e.to_string())?;
    ensure(!wrong.holds, || "scaling 2 wrongly accepted".into())?;
    let eig = s.eigenvalues.clone().ok_or("no eigenvalues")?;
    let pairs = s.pairing.clone().ok_or("no pairing")?;
    ensure(pairs.len() == 2 && pairs.iter().all(|(i, j)| &eig[*i] * &eig[*j] == int(-2)), || format!("pairing {pairs:?}"))?;
    Ok(format!("scaling -2, eigenvalues {:?}, pairs {pairs:?}", eig.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
}

fn random_series(rng: &mut ChaCha8Rng) -> QSeries {
    let n = rng.gen_range(1..=3);
    let monos: Vec<MultiIndex> = (0..=4).flat_map(|d| MultiIndex::all_of_degree(n, d)).collect();
    loop {
        let mut s = QSeries::q_zero(n, 8);
        for m in &monos {
            if rng.gen_bool(0.3) {
                s.add_to_coeff(m.clone(), &rat(rng.gen_range(-40..=40), rng.gen_range(1..=30)));
            }
        }
        if !s.is_zero() {
            return s;
        }
    }
}

fn gauss_multiplicativity() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x11);
    let radii = [int(1), rat(1, 2), rat(3, 4), int(2)];
    for p in [2u64, 5] {
        for k in 0..500 {
            let phi = random_series(&mut rng);
            let n = phi.num_vars();
            let psi = loop {
                let s = random_series(&mut rng);
                if s.num_vars() == n {
                    break s;
                }
            };
            let rho = &radii[k % radii.len()];
            let prod = phi.try_mul(&psi).map_err(|e| e.to_string())?;
            let v = |s: &QSeries| gauss_norm(s, p, rho).unwrap().value();
            ensure(v(&prod) == v(&phi) * v(&psi), || format!("p = {p}, pair {k}: {} != {} * {}", v(&prod), v(&phi), v(&psi)))?;
            ensure(!v(&prod).is_negative(), || "negative norm".into())?;
        }
    }
    within(t, Duration::from_secs(5), "1000 products")?;
    Ok("500 pairs over Q_2 and 500 over Q_5, exact".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("conjugacy identity", conjugacy_identity),
        ("closed form e^x - 1", closed_form),
        ("Newton / order-by-order", newton_equivalence),
        ("norm bound C1", norm_bound),
        ("neighbourhood invariance", neighbourhood_invariance),
        ("algebraic series sqrt(1+x)", eisenstein_sqrt),
        ("vanishing sums", vanishing_sums),
        ("relation probes", relation_probes),
        ("union closure compare", union_compare),
        ("symplectic fixture", symplectic_fixture),
        ("Gauss norm multiplicativity", gauss_multiplicativity),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let took = t.elapsed();
        match out {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} ({took:.2?})", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} ({took:.2?})", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
