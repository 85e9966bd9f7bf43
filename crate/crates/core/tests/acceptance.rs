//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion.
//!
//! `--list` prints the criterion names. The process exits nonzero on a failed
//! criterion only when `CMMOM_ACCEPTANCE_STRICT=1`, so the report can run as
//! part of the ordinary test suite.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use cmmom::cm::{small_cm, ElementKind, FourierWaveform, HarmonicGrid, LoadNode, PortLoad, Unit};
use cmmom::consts::C0;
use cmmom::efie::{
    assemble_gram, assemble_z, excite_deltagap, excite_planewave, radiated_power, CurrentSamples,
};
use cmmom::linalg::{dot_conj, max_abs, rel_diff, CMat, Lu};
use cmmom::mesh::{build_basis, gen_bowtie, gen_plate, BasisSet, BowtieParams, Point};
use cmmom::power::{power_report, PowerReport};
use cmmom::scenario::{solve_scenario, CaseResult, Scenario, SpectrumRecord, SpectrumValue};
use cmmom::solver::{
    bench_compression, build_compressed, loglog_slope, random_system, seeded_rng, solve,
    solve_compressed, solve_full, BenchConfig, LoadOperator, SolveMode, SolveOptions, SystemSpec,
};
use cmmom::C64;

type Check = Result<String, String>;

const CRITERIA: [(&str, fn() -> Check); 9] = [
    ("compression equivalence", compression_equivalence),
    ("LTI reduction", lti_reduction),
    ("power conservation", power_conservation),
    ("conversion-matrix oracle", conversion_oracle),
    ("bowtie reproduction", bowtie),
    ("loop harmonics", strip_loop),
    ("plate scaling law", plate),
    ("compression benchmark", benchmark),
    ("EFIE kernel sanity", efie_sanity),
];

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load_json(name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(scenario_dir().join(name)).expect("bundled scenario");
    serde_json::from_str(&text).expect("scenario json")
}

fn solve_json(v: &serde_json::Value) -> cmmom::Result<Vec<CaseResult>> {
    let s = Scenario::from_json(&v.to_string())?;
    Ok(solve_scenario(&s, &scenario_dir(), None)?.1)
}

fn solve_bundled(name: &str) -> cmmom::Result<Vec<CaseResult>> {
    solve_json(&load_json(name))
}

fn to_na(m: &CMat) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn na_solve(a: DMatrix<C64>, b: &[C64]) -> Vec<C64> {
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular");
    x.iter().copied().collect()
}

fn fmt_e(x: f64) -> String {
    format!("{x:.1e}")
}

fn compression_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    let combos: Vec<(usize, usize, usize)> = [8usize, 32]
        .iter()
        .flat_map(|&n| {
            [1, n / 4]
                .into_iter()
                .flat_map(move |nl| [2usize, 8].into_iter().map(move |k| (n, nl, k)))
        })
        .collect();
    for i in 0..20 {
        let (n, n_l, k) = combos[i % combos.len()];
        let spec = random_system(n, n_l, 2 * k + 1, &mut seeded_rng(1000 + i as u64))
            .map_err(|e| e.to_string())?;
        let full = solve_full(&spec).map_err(|e| e.to_string())?;
        let cs =
            build_compressed(&spec, &spec.loads().loaded_ports()).map_err(|e| e.to_string())?;
        let comp = solve_compressed(&cs, spec.loads()).map_err(|e| e.to_string())?;
        worst = worst.max(rel_diff(&comp.stacked(), &full.stacked()));
    }
    let msg = format!(
        "max relative difference {} over 20 systems (limit 1e-10)",
        fmt_e(worst)
    );
    if worst <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lti_reduction() -> Check {
    let g = gen_plate(0.5, 0.02, 10, 1).map_err(|e| e.to_string())?;
    let feed = g.ports["xmid0"];
    let basis = build_basis(g.mesh);
    let n = basis.len();
    let port = basis
        .index_of_edge(feed.0, feed.1)
        .ok_or("feed edge is not a basis function")?;
    let other = (port + n / 3) % n;
    let grid = HarmonicGrid::from_hz(3e8, 2e7, 3).map_err(|e| e.to_string())?;
    let r_l = 50.0;
    let c_l = 2e-12;
    let loads = [
        PortLoad {
            port,
            load: LoadNode::element(
                ElementKind::Resistor,
                FourierWaveform::constant(r_l, Unit::Ohm),
            ),
        },
        PortLoad {
            port: other,
            load: LoadNode::element(
                ElementKind::Capacitor,
                FourierWaveform::constant(c_l, Unit::Farad),
            ),
        },
    ];
    let weight = |p: usize| basis.get(p).length.powi(2);
    let op = LoadOperator::weighted(grid, n, &loads, None, weight).map_err(|e| e.to_string())?;
    let z: Vec<CMat> = grid
        .omegas()
        .iter()
        .map(|&w| assemble_z(&basis, w).map(|m| m.z))
        .collect::<cmmom::Result<_>>()
        .map_err(|e| e.to_string())?;
    let (dir, pol) = (Point::new(0.0, 0.0, -1.0), Point::new(1.0, 0.0, 0.0));
    let excite = |w: f64| excite_planewave(&basis, w, &dir, &pol, C64::new(1.0, 0.0));
    let spec =
        SystemSpec::new(grid, z.clone(), op, excite(grid.omega(0))).map_err(|e| e.to_string())?;

    // standalone loaded MoM at ω
    let standalone = |ki: usize, v: &[C64]| {
        let w = grid.omega(grid.harmonic(ki));
        let mut a = to_na(&z[ki]);
        a[(port, port)] += C64::new(r_l, 0.0) * weight(port);
        a[(other, other)] += C64::new(0.0, -1.0 / (w * c_l)) * weight(other);
        na_solve(a, v)
    };

    let dense = spec.assemble_dense();
    let nf = grid.n_f();
    let mut coupling: f64 = 0.0;
    for ki in 0..nf {
        for li in (0..nf).filter(|&l| l != ki) {
            coupling = coupling.max(max_abs(dense.as_ref().submatrix(ki * n, li * n, n, n)));
        }
    }

    let sol = solve(
        &spec,
        &SolveOptions {
            mode: SolveMode::Full,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let i0 = sol.current(0);
    let scale = i0.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let leak = (0..nf)
        .filter(|&ki| grid.harmonic(ki) != 0)
        .flat_map(|ki| sol.currents()[ki].iter())
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        / scale;
    let mut worst = rel_diff(i0, &standalone(grid.index(0), spec.excitation()));

    // carrier placed on every comb line in turn, all solved in one dense system
    let v: Vec<Vec<C64>> = (0..nf)
        .map(|ki| excite(grid.omega(grid.harmonic(ki))))
        .collect();
    let lu = Lu::factor(dense, "static comb").map_err(|e| e.to_string())?;
    let x = lu.solve_vec(&v.concat());
    for ki in 0..nf {
        worst = worst.max(rel_diff(&x[ki * n..(ki + 1) * n], &standalone(ki, &v[ki])));
    }
    let msg = format!(
        "off-diagonal blocks max {coupling:.1e}, k≠0 leakage {}, worst harmonic vs standalone {} (N = {n}, N_f = {nf})",
        fmt_e(leak),
        fmt_e(worst)
    );
    if coupling == 0.0 && leak <= 1e-12 && worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// `(conversion error, balance error)` relative to the report's power scale.
fn conservation(r: &PowerReport) -> (f64, f64) {
    let scale = r
        .p_lti_w
        .iter()
        .map(|p| p.abs())
        .fold(r.p_ext_w.abs(), f64::max);
    let conv = r
        .harmonics
        .iter()
        .enumerate()
        .filter(|(_, k)| **k != 0)
        .map(|(i, _)| (r.p_tv_w[i] + r.p_lti_w[i]).abs() / scale)
        .fold(0.0, f64::max);
    (conv, r.balance_residual_rel)
}

fn power_conservation() -> Check {
    let mut worst = (0.0f64, 0.0f64);
    let mut count = 0;
    let mut note = |r: &PowerReport| {
        let (c, b) = conservation(r);
        worst = (worst.0.max(c), worst.1.max(b));
        count += 1;
    };
    for name in [
        "bowtie.json",
        "bowtie_10mhz.json",
        "loop.json",
        "plate.json",
    ] {
        for case in solve_bundled(name).map_err(|e| format!("{name}: {e}"))? {
            note(&case.power);
            for p in &case.sweep {
                note(&p.powers);
            }
        }
    }
    for seed in 0..10 {
        let spec =
            random_system(24, 6, 9, &mut seeded_rng(500 + seed)).map_err(|e| e.to_string())?;
        let sol = solve(&spec, &SolveOptions::default()).map_err(|e| e.to_string())?;
        note(&power_report(&spec, &sol).map_err(|e| e.to_string())?);
    }
    let msg = format!(
        "{count} solves: max |P_tv^k + P_LTI^k| {} and max balance {} relative to P_ext (limit 1e-10)",
        fmt_e(worst.0),
        fmt_e(worst.1)
    );
    if worst.0 <= 1e-10 && worst.1 <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn conversion_oracle() -> Check {
    let mut rng = seeded_rng(77);
    let mut worst: f64 = 0.0;
    let m = 64;
    for trial in 0..10 {
        let (p_g, k_v, k) = (1 + trial % 4, 1 + trial % 3, 2 + trial % 4 + trial % 3);
        let grid = HarmonicGrid::new(20.0, 1.0, k).map_err(|e| e.to_string())?;
        let mut c = vec![C64::new(rng.random_range(0.5..2.0), 0.0)];
        c.extend(
            (1..=p_g).map(|_| C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))),
        );
        let g = FourierWaveform::from_coefficients(c.clone(), Unit::Siemens)
            .map_err(|e| e.to_string())?;
        let v: Vec<C64> = grid
            .harmonics()
            .map(|h| {
                if h.unsigned_abs() as usize <= k_v {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        let cg = small_cm(&g, &grid);
        let comb: Vec<C64> = (0..grid.n_f())
            .map(|i| (0..grid.n_f()).map(|j| cg[(i, j)] * v[j]).sum())
            .collect();

        let coef = |p: i64| -> C64 {
            match p.unsigned_abs() as usize {
                q if q > p_g => C64::new(0.0, 0.0),
                q if p >= 0 => c[q],
                q => c[q].conj(),
            }
        };
        let samples: Vec<C64> = (0..m)
            .map(|s| {
                let th = 2.0 * PI * s as f64 / m as f64;
                let gt: C64 = (-(p_g as i64)..=p_g as i64)
                    .map(|p| coef(p) * C64::from_polar(1.0, p as f64 * th))
                    .sum();
                assert!(gt.im.abs() < 1e-12, "real waveform");
                let vt: C64 = grid
                    .harmonics()
                    .zip(&v)
                    .map(|(h, x)| x * C64::from_polar(1.0, h as f64 * th))
                    .sum();
                vt * gt.re
            })
            .collect();
        let dft: Vec<C64> = grid
            .harmonics()
            .map(|h| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(s, x)| {
                        x * C64::from_polar(1.0, -2.0 * PI * (h * s as i64) as f64 / m as f64)
                    })
                    .sum::<C64>()
                    / m as f64
            })
            .collect();
        worst = worst.max(rel_diff(&comb, &dft));
    }
    let msg = format!(
        "10 random products, max relative difference {} (limit 1e-10)",
        fmt_e(worst)
    );
    if worst <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn db_at(spec: &[SpectrumRecord], k: i64) -> f64 {
    spec.iter()
        .find(|r| r.k == k)
        .map(|r| r.value.db())
        .unwrap_or(f64::NAN)
}

/// Table targets for the switched bowtie; `(all within, description)`.
fn bowtie_table(case: &CaseResult) -> (bool, String) {
    let st = case
        .static_reference
        .map(|r| r.value.db())
        .unwrap_or(f64::NAN);
    let spec = case.spectrum.as_deref().unwrap_or(&[]);
    let (k0, kp1, km1, kp2, km2) = (
        db_at(spec, 0),
        db_at(spec, 1),
        db_at(spec, -1),
        db_at(spec, 2),
        db_at(spec, -2),
    );
    let within = |x: f64, t: f64, tol: f64| (x - t).abs() <= tol;
    let ok = within(st, -21.5, 1.5)
        && within(k0, -27.7, 1.5)
        && within(kp1, -31.5, 1.5)
        && within(km1, -31.5, 1.5)
        && within(kp2, -63.0, 3.0)
        && within(km2, -63.0, 3.0)
        && (kp1 - km1).abs() <= 0.3;
    (
        ok,
        format!("static {st:.1}, k0 {k0:.1}, k±1 {kp1:.1}/{km1:.1}, k±2 {kp2:.1}/{km2:.1} dBsm"),
    )
}

fn bowtie() -> Check {
    let mut faithful = load_json("bowtie.json");
    faithful["grid"]["k_max"] = 20.into();
    let attempt = match solve_json(&faithful) {
        Ok(cases) => {
            let (ok, d) = bowtie_table(&cases[0]);
            if ok {
                return Ok(format!("500 MHz switch, K = 20: {d}"));
            }
            format!("500 MHz switch, K = 20: {d}")
        }
        Err(e) => format!("500 MHz switch, K = 20 rejected ({e})"),
    };
    let mut diag = Vec::new();
    for (name, label) in [
        ("bowtie.json", "500 MHz, K = 5"),
        ("bowtie_10mhz.json", "10 MHz, K = 100"),
    ] {
        let cases = solve_bundled(name).map_err(|e| e.to_string())?;
        let (ok, d) = bowtie_table(&cases[0]);
        diag.push(format!(
            "{label}: {d} [{}]",
            if ok { "within" } else { "outside" }
        ));
    }
    Err(format!("{attempt}; {}", diag.join("; ")))
}

fn strip_loop() -> Check {
    let cases = solve_bundled("loop.json").map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut harmonic_power = BTreeMap::new();
    for case in &cases {
        let label = case.label.clone().unwrap_or_default();
        let spec = case
            .spectrum
            .as_deref()
            .ok_or("loop scenario has no spectrum")?;
        let e = |k: i64| match spec.iter().find(|r| r.k == k).map(|r| r.value) {
            Some(SpectrumValue::Transmit { e_vpm }) => e_vpm,
            _ => f64::NAN,
        };
        let rel: Vec<f64> = [-2, -1, 1, 2]
            .iter()
            .map(|&k| 20.0 * (e(k) / e(0)).log10())
            .collect();
        ok &= rel.iter().all(|r| *r >= -60.0);
        let p = case.power.sideband_radiation();
        harmonic_power.insert(label.clone(), p);
        parts.push(format!(
            "{label}: k=-2,-1,1,2 at {:.1}/{:.1}/{:.1}/{:.1} dB re carrier, Σ_k≠0 P_rad {p:.3e} W",
            rel[0], rel[1], rel[2], rel[3]
        ));
    }
    let (res, cap) = (
        harmonic_power.get("resistive"),
        harmonic_power.get("capacitive"),
    );
    let more = matches!((res, cap), (Some(r), Some(c)) if c > r);
    let msg = format!("{}; capacitive exceeds resistive: {more}", parts.join("; "));
    if ok && more {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn plate() -> Check {
    let mut faithful = load_json("plate.json");
    faithful["grid"]["k_max"] = 10.into();
    faithful.as_object_mut().unwrap().remove("sweep");
    let attempt = match solve_json(&faithful) {
        Ok(_) => "K = 10 accepted".to_string(),
        Err(e) => format!("K = 10 rejected ({e})"),
    };

    let cases = solve_bundled("plate.json").map_err(|e| e.to_string())?;
    let sweep = &cases[0].sweep;
    let low: Vec<_> = sweep.iter().filter(|p| p.r0_ohm <= 1.0 + 1e-9).collect();
    let r0: Vec<f64> = low.iter().map(|p| p.r0_ohm).collect();
    let mut slopes_ok = true;
    let mut slopes = Vec::new();
    for k in [1i64, 2, 3] {
        for kk in [-k, k] {
            let y: Vec<f64> = low
                .iter()
                .map(|p| p.powers.p_rad_w[p.powers.at(kk)])
                .collect();
            let s = loglog_slope(&r0, &y);
            slopes_ok &= (s - 2.0 * k as f64).abs() <= 0.2 * k as f64;
            slopes.push(format!("{kk:+}: {s:.3}"));
        }
    }

    // static absorption curve on the same resistances
    let mut stat = load_json("plate.json");
    stat["grid"]["k_max"] = 0.into();
    let stat_cases = solve_json(&stat).map_err(|e| e.to_string())?;
    let best = stat_cases[0]
        .sweep
        .iter()
        .max_by(|a, b| a.powers.p_abs_w[0].total_cmp(&b.powers.p_abs_w[0]))
        .ok_or("empty sweep")?;
    let at = sweep
        .iter()
        .find(|p| (p.r0_ohm / best.r0_ohm - 1.0).abs() < 1e-9)
        .ok_or("sweep points differ")?;
    let ratio = at.powers.sideband_radiation() / at.powers.p_rad_w[at.powers.at(0)];
    let dominance_ok = ratio >= 3.0;
    let msg = format!(
        "{attempt}; at K = 9 slopes {} (target 2|k| ± 10%); static absorption peaks at R0 = {:.0} Ω where Σ_k≠0 P_rad / P_rad^0 = {ratio:.2} (target ≥ 3)",
        slopes.join(", "),
        best.r0_ohm
    );
    if attempt.contains("accepted") && slopes_ok && dominance_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn benchmark() -> Check {
    let ratios = vec![0.125, 0.25, 0.5];
    let cfg = BenchConfig {
        sizes: vec![128],
        ratios: ratios.clone(),
        freqs: vec![11, 41, 101],
        trials: 1,
        seed: 7,
    };
    let rows = bench_compression(&cfg, |_| {}).map_err(|e| e.to_string())?;
    let min_speedup = rows.iter().map(|r| r.speedup).fold(f64::INFINITY, f64::min);
    let speed: Vec<String> = rows
        .iter()
        .map(|r| format!("({},{}) {:.1}", r.n_l, r.n_f, r.speedup))
        .collect();

    let small = BenchConfig {
        sizes: vec![128],
        ratios,
        freqs: vec![3, 5, 7, 11],
        trials: 5,
        seed: 8,
    };
    let rows = bench_compression(&small, |_| {}).map_err(|e| e.to_string())?;
    let mut unc: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.n_f as f64, r.t_uncompressed_s))
        .collect();
    unc.dedup_by(|a, b| a.0 == b.0);
    let alpha = loglog_slope(
        &unc.iter().map(|p| p.0).collect::<Vec<_>>(),
        &unc.iter().map(|p| p.1).collect::<Vec<_>>(),
    );
    let mut groups: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.t_construct_s > r.t_invert_s) {
        groups
            .entry(r.n_l)
            .or_default()
            .push((r.n_f as f64, r.speedup));
    }
    let fits: Vec<(usize, f64)> = groups
        .iter()
        .filter(|(_, pts)| pts.len() >= 3)
        .map(|(nl, pts)| {
            (
                *nl,
                loglog_slope(
                    &pts.iter().map(|p| p.0).collect::<Vec<_>>(),
                    &pts.iter().map(|p| p.1).collect::<Vec<_>>(),
                ),
            )
        })
        .collect();
    let slope_ok = !fits.is_empty() && fits.iter().all(|(_, s)| (s - (alpha - 1.0)).abs() <= 0.5);
    let fit_txt: Vec<String> = fits
        .iter()
        .map(|(nl, s)| format!("N_l={nl}: {s:.2}"))
        .collect();
    let msg = format!(
        "speedups (N_l,N_f) {} (min {min_speedup:.2}); α = {alpha:.2}, construction-dominated slopes [{}] vs α−1 = {:.2}",
        speed.join(" "),
        fit_txt.join(", "),
        alpha - 1.0
    );
    if min_speedup > 1.0 && slope_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bowtie_basis() -> cmmom::Result<BasisSet> {
    let g = gen_bowtie(&BowtieParams {
        length: 0.036,
        flare_angle_deg: 155.0,
        edges_per_wavelength: 60.0,
        ref_freq_hz: 3e9,
        feed_width: None,
    })?;
    Ok(build_basis(g.mesh))
}

fn dipole_impedance(nx: usize) -> cmmom::Result<C64> {
    let g = gen_plate(0.5, 0.01, nx, 1)?;
    let feed = g.ports["xmid0"];
    let basis = build_basis(g.mesh);
    let port = basis.index_of_edge(feed.0, feed.1).expect("feed edge");
    let omega = 2.0 * PI * C0;
    let z = assemble_z(&basis, omega)?.z;
    let v = excite_deltagap(&basis, port, C64::new(1.0, 0.0))?;
    let i = Lu::factor(z, "dipole")?.solve_vec(&v);
    Ok(C64::new(1.0, 0.0) / (i[port] * basis.get(port).length))
}

fn efie_sanity() -> Check {
    let e = |e: cmmom::Error| e.to_string();
    let target = C64::new(73.0, 42.0);
    let z: Vec<C64> = [20, 40, 80]
        .iter()
        .map(|&nx| dipole_impedance(nx))
        .collect::<cmmom::Result<_>>()
        .map_err(e)?;
    let z_last = z[2];
    let dipole_err = (z_last - target).norm() / target.norm();
    let dipole = format!(
        "dipole Zin {:.1}{:+.1}j Ω at nx 20/40/80 → {:.1}{:+.1}j Ω ({:.0}% from 73+42j, limit 10%)",
        z[0].re,
        z[0].im,
        z_last.re,
        z_last.im,
        100.0 * dipole_err
    );

    let basis = bowtie_basis().map_err(e)?;
    let gram = assemble_gram(&basis).g;
    let gn = DMatrix::from_fn(gram.nrows(), gram.ncols(), |i, j| gram[(i, j)]);
    let spd = (&gn - gn.transpose()).amax() <= 1e-14 * gn.amax() && gn.cholesky().is_some();

    let omega = 2.0 * PI * 3e9;
    let zm = assemble_z(&basis, omega).map_err(e)?.z;
    let mut d: f64 = 0.0;
    for i in 0..zm.nrows() {
        for j in 0..zm.ncols() {
            d = d.max((zm[(i, j)] - zm[(j, i)]).norm());
        }
    }
    let sym = d / max_abs(zm.as_ref());

    let v = excite_planewave(
        &basis,
        omega,
        &Point::new(-1.0, 0.0, 0.0),
        &Point::new(0.0, 0.0, 1.0),
        C64::new(1.0, 0.0),
    );
    let i = Lu::factor(zm, "bowtie").map_err(e)?.solve_vec(&v);
    let p_ext = 0.5 * dot_conj(&i, &v).re;
    let p_rad = radiated_power(&CurrentSamples::new(&basis, &i), omega, 24, 24);
    let ext_err = (p_ext - p_rad).abs() / p_ext.abs();

    let msg = format!(
        "{dipole}; Gram SPD: {spd}; Z symmetry {}; P_ext vs radiated {:.2}%",
        fmt_e(sym),
        100.0 * ext_err
    );
    if dipole_err <= 0.1 && spd && sym <= 1e-10 && ext_err <= 0.01 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        for (i, (name, _)) in CRITERIA.iter().enumerate() {
            println!("{} {name}", i + 1);
        }
        return;
    }
    let mut failed = 0;
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let t0 = Instant::now();
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{status} {} {name}: {detail} ({:.1} s)",
            i + 1,
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        CRITERIA.len() - failed,
        CRITERIA.len()
    );
    if failed > 0 && std::env::var("CMMOM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
