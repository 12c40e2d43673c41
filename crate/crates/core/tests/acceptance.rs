//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use traffic_core::geometry::{merge_network, NetworkPoint};
use traffic_core::harness::{builtin_test, xi_sweep, Run, Scenario, SweepResult};
use traffic_core::metrics::{dftl_road, w_micro_road, wp_line_rearrangement, DiscreteMeasure};
use traffic_core::scale::{antidiscretize, discretize, ell_n, l1_distance};
use traffic_core::transport::{solve, TransportProblem};

/// Floor of the Test 4 diagnostic at n = 400, p = 1, from the first validated run.
const TEST4_XI_FLOOR: f64 = 208.06335554227294;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn within(elapsed: Duration, limit_secs: u64, outcome: Outcome) -> Outcome {
    let secs = elapsed.as_secs_f64();
    match outcome {
        Ok(msg) if secs <= limit_secs as f64 => Ok(format!("{msg} ({secs:.2}s)")),
        Ok(msg) => Err(format!("{msg} but took {secs:.2}s > {limit_secs}s")),
        Err(msg) => Err(format!("{msg} ({secs:.2}s)")),
    }
}

fn sweep(k: usize, p: f64) -> Result<SweepResult, String> {
    let mut s = builtin_test(k).map_err(|e| e.to_string())?;
    s.p = p;
    xi_sweep(&s).map_err(|e| e.to_string())
}

fn xis(r: &SweepResult) -> Vec<f64> {
    r.rows.iter().map(|row| row.xi).collect()
}

fn fmt(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn decay(k: usize, ps: &[f64], factor: f64) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for &p in ps {
        let xi = xis(&sweep(k, p)?);
        let dec = strictly_decreasing(&xi);
        let ratio = xi[xi.len() - 1] / xi[0];
        ok &= dec && ratio <= factor;
        notes.push(format!("p={p}: xi={} decreasing={dec} last/first={ratio:.4}", fmt(&xi)));
    }
    check(ok, notes.join("; "), notes.join("; "))
}

fn criterion1() -> Outcome {
    let s = builtin_test(1).map_err(|e| e.to_string())?;
    let prepared = s.prepare().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for n in [25, 100, 400] {
        let a = prepared.road_micro(Run::Flat, n).and_then(|m| m.simulate(s.t_f));
        let b = prepared.road_micro(Run::Sharp, n).and_then(|m| m.simulate(s.t_f));
        let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
        for p in [1.0, 2.0] {
            let ell = a.params.ell_n;
            let d = dftl_road(&a.positions, &b.positions, ell, p).map_err(|e| e.to_string())?;
            let w = w_micro_road(&a.positions, &b.positions, ell, p).map_err(|e| e.to_string())?;
            worst = worst.max((d - w).abs() / (1.0 + d));
        }
    }
    check(
        worst <= 1e-8,
        format!("max |dftl - w_micro|/(1 + dftl) = {worst:.3e}"),
        format!("relative gap {worst:.3e} exceeds 1e-8"),
    )
}

fn criterion5() -> Outcome {
    let r = sweep(4, 1.0)?;
    let xi = xis(&r);
    let min = xi.iter().copied().fold(f64::INFINITY, f64::min);
    let gaps: Vec<f64> = r.rows.iter().map(|row| row.dftl - row.w_micro.unwrap_or(f64::NAN)).collect();
    let gap_ratio = gaps[gaps.len() - 1] / gaps[0];
    let floor = xi[xi.len() - 1];
    let baseline_ok = (floor - TEST4_XI_FLOOR).abs() <= 1e-6 * TEST4_XI_FLOOR;
    let msg = format!(
        "xi={} min/first={:.4}; dftl-w_micro={} last/first={gap_ratio:.4}; floor {floor} vs baseline {TEST4_XI_FLOOR}",
        fmt(&xi),
        min / xi[0],
        fmt(&gaps)
    );
    check(
        min >= 0.5 * xi[0] && gaps.iter().all(|&g| g > 0.0) && gap_ratio >= 0.5 && baseline_ok,
        msg.clone(),
        msg,
    )
}

fn brute_force(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    loop {
        let c: f64 = perm.iter().enumerate().map(|(i, &j)| (xs[i] - ys[j]).abs()).sum::<f64>() / k as f64;
        best = best.min(c);
        // Next lexicographic permutation.
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return best;
        };
        let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=8);
        let xs: Vec<f64> = (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let mut ys: Vec<f64> = (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect();
        ys.shuffle(&mut rng);
        let w = 1.0 / k as f64;
        let problem = TransportProblem::from_fn(vec![w; k], vec![w; k], |i, j| (xs[i] - ys[j]).abs())
            .map_err(|e| e.to_string())?;
        let lp = solve(&problem).map_err(|e| e.to_string())?.objective;
        let exact = brute_force(&xs, &ys);
        let line = wp_line_rearrangement(
            &DiscreteMeasure::new(xs.iter().map(|&x| (x, w)).collect()),
            &DiscreteMeasure::new(ys.iter().map(|&y| (y, w)).collect()),
            1.0,
        )
        .map_err(|e| e.to_string())?;
        let scale = exact.max(1e-300);
        worst = worst.max((lp - exact).abs() / scale).max((line - exact).abs() / scale);
    }
    check(
        worst <= 1e-9,
        format!("200 cases, worst relative deviation {worst:.3e}"),
        format!("worst relative deviation {worst:.3e} > 1e-9"),
    )
}

fn criterion7() -> Outcome {
    let mut worst_drift: f64 = 0.0;
    let mut bound_violations = 0usize;
    let mut worst_gap_deficit: f64 = f64::NEG_INFINITY;
    for k in 1..=4 {
        let s: Scenario = builtin_test(k).map_err(|e| e.to_string())?;
        let prepared = s.prepare().map_err(|e| e.to_string())?;
        let n_list: Vec<usize> = if s.depends_on_n() { s.n_list.clone() } else { vec![s.n_list[0]] };
        for run in [Run::Flat, Run::Sharp] {
            for &n in &n_list {
                if s.is_network() {
                    let g = prepared.network_macro(run, n).map_err(|e| e.to_string())?;
                    let m0 = g.mass();
                    g.simulate_with(s.t_f, |st| {
                        worst_drift = worst_drift.max((st.mass() - m0).abs() / m0);
                        bound_violations += st.eta.iter().flatten().filter(|&&x| x < 0.0).count();
                    })
                    .map_err(|e| e.to_string())?;
                } else {
                    let g = prepared.road_macro(run, n).map_err(|e| e.to_string())?;
                    let m0 = g.mass();
                    g.simulate_with(s.t_f, |st| {
                        worst_drift = worst_drift.max((st.mass() - m0).abs() / m0);
                        bound_violations += st.rho.iter().filter(|&&x| !(0.0..=1.0).contains(&x)).count();
                    })
                    .map_err(|e| e.to_string())?;
                }
            }
            if !s.is_network() {
                for &n in &s.n_list {
                    let m = prepared.road_micro(run, n).map_err(|e| e.to_string())?;
                    let ell = m.params.ell_n;
                    m.simulate_with(s.t_f, |st| {
                        if let Some(g) = st.min_gap() {
                            worst_gap_deficit = worst_gap_deficit.max(ell - g);
                        }
                    })
                    .map_err(|e| e.to_string())?;
                }
            }
        }
    }
    let msg = format!(
        "max relative mass drift {worst_drift:.3e}, bound violations {bound_violations}, max (ell_n - min gap) {worst_gap_deficit:.3e}"
    );
    check(
        worst_drift <= 1e-12 && bound_violations == 0 && worst_gap_deficit <= 1e-9,
        msg.clone(),
        msg,
    )
}

fn criterion8() -> Outcome {
    let s = builtin_test(1).map_err(|e| e.to_string())?;
    let prepared = s.prepare().map_err(|e| e.to_string())?;
    let r = prepared.initial_density(Run::Flat, 0, 10).map_err(|e| e.to_string())?;
    let m = r.mass();
    let mut gaps = Vec::new();
    for n in [10, 20, 40, 80] {
        let y = discretize(&r, n).map_err(|e| e.to_string())?;
        let back = antidiscretize(&y, ell_n(m, n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        gaps.push(l1_distance(&back, &r));
    }
    // The datum is a single plateau, so the exact gap is zero at every n and
    // the computed values are rounding residue; they must stay at that level.
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12 * m);
    let msg = format!("L1 gaps {} (M = {m}), threshold {}", fmt(&gaps), 0.05 * m);
    check(monotone && gaps[3] < 0.05 * m, msg.clone(), msg)
}

fn criterion9() -> Outcome {
    let net = merge_network(20.0).map_err(|e| e.to_string())?;
    let paths = net.enumerate_paths();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let point = |rng: &mut ChaCha8Rng| {
        let arc = rng.gen_range(0..3);
        if arc == 2 && rng.gen_bool(0.2) {
            NetworkPoint { arc, offset: 20.0, extension: rng.gen_range(0.0..30.0) }
        } else {
            NetworkPoint::on_arc(arc, rng.gen_range(0.0..=20.0))
        }
    };
    let mut asym = 0usize;
    let mut worst_triangle: f64 = 0.0;
    for _ in 0..500 {
        let (a, b, c) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let d = |x: &NetworkPoint, y: &NetworkPoint| net.distance(x, y).unwrap();
        if d(&a, &b) != d(&b, &a) {
            asym += 1;
        }
        worst_triangle = worst_triangle.max(d(&a, &c) - d(&a, &b) - d(&b, &c));
    }
    let mut worst_round_trip: f64 = 0.0;
    for _ in 0..500 {
        let path = &paths[rng.gen_range(0..paths.len())];
        let s = rng.gen_range(0.0..path.length + 20.0);
        let p = path.point_at(&net, s).map_err(|e| e.to_string())?;
        let back = path.coordinate(&p).ok_or("point left its path")?;
        worst_round_trip = worst_round_trip.max((back - s).abs());
    }
    let msg = format!(
        "asymmetric pairs {asym}, worst triangle excess {worst_triangle:.3e}, worst round trip {worst_round_trip:.3e}"
    );
    check(asym == 0 && worst_triangle <= 1e-12 && worst_round_trip <= 1e-12, msg.clone(), msg)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 micro distance equality on a road", 30, criterion1),
        ("2 Test 1 convergence", 120, || decay(1, &[1.0, 2.0], 0.1)),
        ("3 Test 2 convergence", 600, || decay(2, &[1.0, 2.0], 0.1)),
        ("4 Test 3 convergence", 600, || decay(3, &[1.0], 0.2)),
        ("5 Test 4 non-convergence", 600, criterion5),
        ("6 transport oracle equivalence", 20, criterion6),
        ("7 conservation and bounds", 600, criterion7),
        ("8 discretization round trip", 600, criterion8),
        ("9 network metric sanity", 600, criterion9),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        match within(start.elapsed(), limit, outcome) {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
