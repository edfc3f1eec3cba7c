//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured figures (`cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use jacobi_cli::{cmd_compare, cmd_reconstruct, CommandKind, Input, RunConfig, EXIT_OK};
use jacobi_core::corpus::{random_polynomial_curve, random_reparam};
use jacobi_core::curvature::{matrix_schwarzian, ricci, schwarzian_change_of_parameter, verify_derivative_curve};
use jacobi_core::cycles::{cycle_membership, cycle_through, is_flat, mobius_fit, CyclePoint};
use jacobi_core::linalg::{from_rows, max_abs};
use jacobi_core::matcurve::{preset, CurveSpec, PRESET_NAMES};
use jacobi_core::pipeline::{analyze, compare_analyses};
use jacobi_core::reconstruct::{integrate_frame, preset_prescription, roundtrip, IntegrateOptions};
use jacobi_core::symspace::{ConformalTransform, LagrangianChartPoint};
use jacobi_core::{sample_curve, Mat, SampleGrid, SymmetricMatrixCurve, Tolerances};

fn verdict(id: u32, title: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn unit() -> SampleGrid {
    SampleGrid::new(0.0, 1.0, 201).unwrap()
}

fn diag(v: &[f64]) -> Mat {
    let mut m = Mat::zeros(v.len(), v.len());
    for (i, x) in v.iter().enumerate() {
        m[(i, i)] = *x;
    }
    m
}

/// Random curves of the corpus: `count` per dimension, n = 2 and 3.
fn corpus(count: u64) -> Vec<(String, SymmetricMatrixCurve)> {
    let mut out = Vec::new();
    for n in [2, 3] {
        for seed in 0..count {
            out.push((format!("random n={n} seed={seed}"), random_polynomial_curve(n, seed).unwrap().0));
        }
    }
    out
}

fn admissible_presets() -> Vec<&'static str> {
    PRESET_NAMES.iter().copied().filter(|&p| p != "affine-line").collect()
}

#[test]
fn criterion_01_first_worked_example() {
    let start = Instant::now();
    let c = preset("paper-6.2-ex1").unwrap().curve;
    let a = analyze(&c, &unit(), &Tolerances::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let inv = a.invariants.as_ref().expect("admissible");
    let r = &inv.reduced;
    let (mut k_err, mut s_err, mut z_err, mut m_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..r.len() {
        let k = r.curvatures(i);
        k_err = k_err.max((k[0] + 2.0).abs()).max(k[1].abs());
        s_err = s_err.max(max_abs(&r.sigma[i]));
        z_err = z_err.max((r.zeta[i] - 1.0).abs());
        let t = r.t[i];
        let want = [t.cosh() + t.sinh(), 1.0 + t];
        let m = &inv.frame.m[i];
        for col in 0..2 {
            let sign = if m[(col, col)] < 0.0 { -1.0 } else { 1.0 };
            for row in 0..2 {
                let expected = if row == col { want[col] } else { 0.0 };
                m_err = m_err.max((sign * m[(row, col)] - expected).abs());
            }
        }
    }
    let pass = k_err <= 1e-5 && s_err <= 1e-6 && z_err <= 1e-5 && m_err <= 1e-6 && elapsed < 1.0;
    verdict(
        1,
        "first worked example",
        pass,
        format!("k err {k_err:.2e}, Sigma err {s_err:.2e}, zeta err {z_err:.2e}, M err {m_err:.2e}, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_02_second_worked_example() {
    let c = preset("paper-6.2-ex2").unwrap().curve;
    let a = analyze(&c, &unit(), &Tolerances::default()).unwrap();
    let r = a.reduced().expect("admissible");
    let (mut k_err, mut s_err, mut z_err) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..r.len() {
        let k = r.curvatures(i);
        k_err = k_err.max(k[0].abs()).max((k[1] - 2.0).abs());
        s_err = s_err.max(max_abs(&r.sigma[i]));
        z_err = z_err.max((r.zeta[i] - 1.0).abs());
    }

    // reconstruction through the CLI route, with the built-in prescription
    let mut cfg = RunConfig::new(CommandKind::Reconstruct);
    cfg.inputs = vec![Input::Preset("paper-6.2-ex2".into())];
    let out = cmd_reconstruct(&cfg).unwrap();
    let curve = out.artifacts.iter().find(|a| a.name == "curve.json").expect("curve written");
    let spec = CurveSpec::from_json(&curve.contents).unwrap();
    let samples = spec.samples.expect("table");
    let mut s_rec_err = 0.0f64;
    for (t, s) in samples.t.iter().zip(&samples.s) {
        let s = from_rows(s).unwrap();
        let want = diag(&[t / (1.0 + t), t.sin() / (t.cos() + t.sin())]);
        s_rec_err = s_rec_err.max(max_abs(&(s - want)));
    }
    let covered = samples.t.first() == Some(&0.0) && samples.t.last() == Some(&1.0);
    let pass = k_err <= 1e-5 && s_err <= 1e-6 && z_err <= 1e-5 && s_rec_err <= 1e-6 && covered && out.code == EXIT_OK;
    verdict(
        2,
        "second worked example",
        pass,
        format!("k err {k_err:.2e}, Sigma err {s_err:.2e}, zeta err {z_err:.2e}, reconstructed S err {s_rec_err:.2e}"),
    );
}

#[test]
fn criterion_03_derivative_curve() {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    let mut checked = 0;
    // the affine line has S'' = 0: its derivative curve is the point at infinity
    for name in admissible_presets() {
        let p = preset(name).unwrap();
        for u in [0.25, 0.5, 0.75] {
            let tau = p.grid.t0 + u * (p.grid.t1 - p.grid.t0);
            worst = worst.max(verify_derivative_curve(&p.curve, tau, 1e-3, &tol).unwrap());
            checked += 1;
        }
    }
    for (_, c) in corpus(10) {
        for tau in [0.2, 0.5, 0.8] {
            worst = worst.max(verify_derivative_curve(&c, tau, 1e-3, &tol).unwrap());
            checked += 1;
        }
    }
    verdict(3, "derivative curve", worst <= 1e-4, format!("max residual {worst:.2e} over {checked} points"));
}

#[test]
fn criterion_04_change_of_parameter() {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    for pair in 0..50u64 {
        let n = 2 + (pair % 2) as usize;
        let c = random_polynomial_curve(n, 100 + pair).unwrap().0;
        let psi = random_reparam(pair);
        let composed = c.reparametrized(psi, (0.0, 1.0)).unwrap();
        for t in [0.1, 0.4, 0.7, 0.95] {
            let [p0, p1, p2, p3] = psi.jet(t);
            let predicted = schwarzian_change_of_parameter(&c.jet(p0, &tol).unwrap(), p1, p2, p3, tol.cond_max).unwrap();
            let direct = matrix_schwarzian(&composed.jet(t, &tol).unwrap(), tol.cond_max).unwrap();
            worst = worst.max(max_abs(&(&predicted - &direct)) / max_abs(&direct).max(1.0));
        }
    }
    verdict(4, "change of parameter", worst <= 1e-6, format!("max relative deviation {worst:.2e} over 50 pairs"));
}

#[test]
fn criterion_05_normalization() {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    let mut curves = 0;
    let mut inputs: Vec<(SymmetricMatrixCurve, SampleGrid)> = Vec::new();
    for name in admissible_presets() {
        let p = preset(name).unwrap();
        let m = ((p.grid.t1 - p.grid.t0) / 1e-2).ceil() as usize + 1;
        inputs.push((p.curve, SampleGrid::new(p.grid.t0, p.grid.t1, m.max(p.grid.m)).unwrap()));
    }
    for (_, c) in corpus(10) {
        inputs.push((c.clone(), SampleGrid::new(0.0, 1.0, 101).unwrap()));
        inputs.push((c, SampleGrid::new(0.0, 1.0, 401).unwrap()));
    }
    for (c, g) in &inputs {
        assert!(g.h() <= 1e-2 + 1e-15);
        let a = analyze(c, g, &tol).unwrap();
        let Some(inv) = a.invariants.as_ref() else { continue };
        curves += 1;
        let direct = inv.curvature.normalization.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        worst = worst.max(direct).max(inv.reduced.normalization_defect());
    }
    let pass = worst <= 1e-5 && curves == inputs.len();
    verdict(5, "normalization", pass, format!("max |prod - 1| {worst:.2e} on {curves}/{} analyses", inputs.len()));
}

#[test]
fn criterion_06_csp_invariance() {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut runs = 0;
    for name in admissible_presets() {
        for seed in 0..20u64 {
            let magnitude = 0.5 + 0.15 * seed as f64;
            let scale = if seed % 2 == 0 { magnitude } else { -magnitude };
            let mut cfg = RunConfig::new(CommandKind::Compare);
            cfg.inputs = vec![Input::Preset(name.into())];
            cfg.seed = Some(seed);
            cfg.scale = scale;
            cfg.tol.equiv_tol = 1e-4;
            runs += 1;
            match cmd_compare(&cfg) {
                Ok(o) => {
                    let eq = &o.summary["equivalence"];
                    let dev = eq["k_deviation"].as_f64().unwrap_or(f64::INFINITY).max(eq["sigma_deviation"].as_f64().unwrap_or(f64::INFINITY));
                    worst = worst.max(dev);
                    if o.code != EXIT_OK {
                        failures.push(format!("{name} seed {seed}: exit {}", o.code));
                    }
                }
                Err(e) => failures.push(format!("{name} seed {seed}: {e}")),
            }
        }
    }
    verdict(
        6,
        "conformal symplectic invariance",
        failures.is_empty(),
        format!("{}/{runs} equivalent, max deviation {worst:.2e} {failures:?}", runs - failures.len()),
    );
}

#[test]
fn criterion_07_reconstruction_roundtrip() {
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    let mut worst_dev = 0.0f64;
    let mut worst_resid = 0.0f64;
    for name in ["paper-6.2-ex1", "paper-6.2-ex2"] {
        let p = preset_prescription(name, SampleGrid::new(0.0, 1.0, 1001).unwrap(), &tol).unwrap();
        worst_resid = worst_resid.max(integrate_frame(&p, IntegrateOptions::default(), &tol).unwrap().max_residual());
    }
    let mut cases: Vec<(String, SymmetricMatrixCurve, SampleGrid)> =
        admissible_presets().into_iter().map(|n| { let p = preset(n).unwrap(); (n.to_string(), p.curve, p.grid) }).collect();
    for seed in 0..10u64 {
        let n = 2 + (seed % 2) as usize;
        cases.push((format!("random n={n} seed={}", 200 + seed), random_polynomial_curve(n, 200 + seed).unwrap().0, SampleGrid::new(0.0, 1.0, 1001).unwrap()));
    }
    for (label, c, g) in &cases {
        match roundtrip(c, g, &tol, 1e-3) {
            Ok(r) => {
                if let Some(e) = &r.equivalence {
                    worst_dev = worst_dev.max(e.k_deviation).max(e.sigma_deviation);
                }
                worst_resid = worst_resid.max(r.max_symplecticity_residual);
                if !r.equivalent {
                    failures.push(format!("{label}: {:?}", r.reanalysis_failure));
                }
            }
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }
    let pass = failures.is_empty() && worst_resid <= 1e-6;
    verdict(
        7,
        "reconstruction round trip",
        pass,
        format!("{} curves, max deviation {worst_dev:.2e}, max symplecticity residual {worst_resid:.2e} {failures:?}", cases.len()),
    );
}

#[test]
fn criterion_08_ricci_symmetry() {
    let tol = Tolerances::default();
    let mut curves: Vec<(SymmetricMatrixCurve, SampleGrid)> =
        PRESET_NAMES.iter().map(|n| { let p = preset(n).unwrap(); (p.curve, p.grid) }).collect();
    for (_, c) in corpus(10) {
        let g = ConformalTransform::random(c.n(), 7, 1.3).unwrap().matrix();
        curves.push((c.transformed(&g, &tol).unwrap(), unit()));
        curves.push((c.reparametrized(random_reparam(3), (0.0, 1.0)).unwrap(), unit()));
        curves.push((c, unit()));
    }
    let (mut asym, mut imag) = (0.0f64, 0.0f64);
    let mut samples = 0;
    for (c, g) in &curves {
        for j in sample_curve(c, g, &tol).unwrap() {
            let r = ricci(&j, &tol).unwrap();
            asym = asym.max(r.asymmetry);
            // independent real-spectrum check on the unsymmetrized matrix
            let scale = 1.0 + max_abs(&r.schwarzian);
            for z in r.schwarzian.complex_eigenvalues().iter() {
                imag = imag.max(z.im.abs() / scale);
            }
            samples += 1;
        }
    }
    let pass = asym <= 1e-8 && imag <= 1e-8;
    verdict(8, "Ricci symmetry", pass, format!("max asymmetry {asym:.2e}, max imaginary part {imag:.2e} over {samples} samples"));
}

/// `offset + ((a t + b)/(c t + d)) S1` with exact jets.
fn mobius_curve(coef: [f64; 4], offset: Mat, s1: Mat) -> SymmetricMatrixCurve {
    let [a, b, c, d] = coef;
    let det = a * d - b * c;
    SymmetricMatrixCurve::analytic(s1.nrows(), (-0.5, 1.5), move |t| {
        let q = c * t + d;
        let l = (a * t + b) / q;
        let l1 = det / (q * q);
        let l2 = -2.0 * c * det / (q * q * q);
        let l3 = 6.0 * c * c * det / (q * q * q * q);
        [&offset + &s1 * l, &s1 * l1, &s1 * l2, &s1 * l3]
    })
    .unwrap()
}

fn normalized(m: &[f64; 4]) -> [f64; 4] {
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lead = m.iter().copied().fold(0.0, |b: f64, x| if x.abs() > b.abs() { x } else { b });
    m.map(|x| x / norm * lead.signum())
}

#[test]
fn criterion_09_cycles() {
    let tol = Tolerances::default();
    let g = SampleGrid::new(0.0, 1.0, 41).unwrap();
    let s1a = diag(&[2.0, -1.0]) / 5f64.sqrt();
    let s1b = {
        let m = from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.3], vec![0.0, 0.3, -1.5]]).unwrap();
        let n = m.norm();
        m / n
    };
    let offa = from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let offb = from_rows(&[vec![0.0, 0.3, 1.0], vec![0.3, 0.0, -0.5], vec![1.0, -0.5, 0.0]]).unwrap();
    let synth = [
        ([2.0, 1.0, 1.0, 3.0], offa.clone(), s1a.clone()),
        ([1.0, -0.5, 0.4, 1.0], offa, s1a),
        ([0.5, 2.0, -0.3, 1.0], offb.clone(), s1b.clone()),
        ([1.0, 0.0, 0.0, 1.0], offb, s1b),
    ];
    let mut flat: Vec<SymmetricMatrixCurve> = vec![preset("affine-line").unwrap().curve];
    let (mut fit_resid, mut fit_err) = (0.0f64, 0.0f64);
    for (coef, off, s1) in &synth {
        // offsets are orthogonal to S1, so the fit must return these exact coefficients
        assert!(off.dot(s1).abs() < 1e-14);
        let c = mobius_curve(*coef, off.clone(), s1.clone());
        let fit = mobius_fit(&sample_curve(&c, &g, &tol).unwrap(), 1e-8).unwrap();
        fit_resid = fit_resid.max(fit.residual);
        let (want, got) = (normalized(coef), normalized(&[fit.a, fit.b, fit.c, fit.d]));
        fit_err = fit_err.max(want.iter().zip(&got).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        fit_err = fit_err.max(max_abs(&(&fit.s1 - s1)).min(max_abs(&(&fit.s1 + s1))));
        fit_err = fit_err.max(max_abs(&(&fit.offset - off)));
        let moved = ConformalTransform::random(s1.nrows(), 9, -1.4).unwrap().matrix();
        flat.push(c.transformed(&moved, &tol).unwrap());
        flat.push(c);
    }

    let mut all_flat = true;
    let (mut worst_member, mut worst_perm) = (0.0f64, 0.0f64);
    let triples = [(0, 20, 40), (3, 17, 29), (1, 2, 3), (40, 10, 25)];
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for c in &flat {
        all_flat &= is_flat(c, &g, tol.flat_tol, &tol).unwrap();
        let pts: Vec<LagrangianChartPoint> =
            sample_curve(c, &g, &tol).unwrap().into_iter().map(|j| LagrangianChartPoint::from_symmetric(j.s)).collect();
        for &(i, j, k) in &triples {
            let cyc = cycle_through(&pts[i], &pts[j], &pts[k], &tol).unwrap();
            for p in &pts {
                worst_member = worst_member.max(cycle_membership(&cyc, &CyclePoint::Chart(p.clone()), 1e-7, &tol).unwrap().residual);
            }
            // every role assignment yields the same cycle: points generated by
            // one are contained in all others
            let trio = [i, j, k];
            let cycles: Vec<_> = perms
                .iter()
                .map(|p| cycle_through(&pts[trio[p[0]]], &pts[trio[p[1]]], &pts[trio[p[2]]], &tol).unwrap())
                .collect();
            for a in &cycles {
                for lambda in [-2.0, -0.3, 0.7, 3.0] {
                    let Ok(q) = a.point_at(lambda, tol.cond_max) else { continue };
                    for b in &cycles {
                        worst_perm = worst_perm.max(cycle_membership(b, &CyclePoint::Chart(q.clone()), 1e-7, &tol).unwrap().residual);
                    }
                }
            }
        }
    }
    let pass = all_flat && worst_member <= 1e-7 && worst_perm <= 1e-7 && fit_resid <= 1e-8 && fit_err <= 1e-8;
    verdict(
        9,
        "cycles",
        pass,
        format!(
            "{} flat curves flat={all_flat}, membership {worst_member:.2e}, permutations {worst_perm:.2e}, fit residual {fit_resid:.2e}, coefficient error {fit_err:.2e}",
            flat.len()
        ),
    );
}

#[test]
fn criterion_10_reparametrization_invariance() {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let c = match seed % 3 {
            0 => preset("paper-6.2-ex1").unwrap().curve,
            1 => random_polynomial_curve(2, 300 + seed).unwrap().0,
            _ => random_polynomial_curve(3, 300 + seed).unwrap().0,
        };
        let psi = random_reparam(1000 + seed);
        let re = c.reparametrized(psi, (-0.1, 1.1)).unwrap();
        // the one-sided zeta'' stencils at the two end samples are O(h^3);
        // h = 2.5e-3 keeps them well inside the tolerance
        let g = SampleGrid::new(0.0, 1.0, 401).unwrap();
        let a = analyze(&c, &g, &tol).unwrap();
        let b = analyze(&re, &g, &tol).unwrap();
        let cmp = compare_analyses(&a, &b, 1e-4).unwrap();
        match cmp.equivalence {
            // k_i = -2 K_ii
            Some(e) => {
                let dk = 2.0 * e.k_deviation;
                worst = worst.max(dk);
                if dk > 1e-4 {
                    failures.push(seed);
                }
            }
            None => failures.push(seed),
        }
    }
    verdict(
        10,
        "reparametrization invariance",
        failures.is_empty(),
        format!("max k deviation {worst:.2e} over 10 changes of parameter (h = 2.5e-3), failing seeds {failures:?}"),
    );
}
