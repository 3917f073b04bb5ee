//! Implementations of the subcommands. Each returns the process exit code
//! on success; any `Err` is reported and mapped to exit code 1.

use crate::output::{thread_cap, write_atomic, RunReport};
use crate::{ApproximateArgs, ConvertArgs, DualArgs, NormArgs, VerifyArgs};
use anyhow::{bail, Context, Result};
use relu_span::io::{
    extended_point_to_value, measure_from_json, network_from_json, network_to_json, pl_from_json,
    pl_to_json,
};
use relu_span::{
    annihilation_test, apply_a, hat, network_to_pl, pair, pair_bounded_extension, parse_expr,
    pl_to_network, ramp_minus, ramp_plus, relu, residual_target, step_f, step_g, to_target,
    y_norm_exact, y_norm_grid_threaded, ApproxConfig, CompactGrid, ExtendedPoint, NormReport,
    PiecewiseLinear, ReluNetwork, ReluUnit, YTarget,
};
use std::path::Path;
use std::time::Instant;

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn norm_report_value(report: &NormReport) -> serde_json::Value {
    serde_json::json!({
        "value": report.value,
        "witness": extended_point_to_value(report.witness),
        "method": report.method.as_str(),
    })
}

// ---------------------------------------------------------------------
// approximate
// ---------------------------------------------------------------------

pub fn approximate(args: ApproximateArgs) -> Result<u8> {
    let start = Instant::now();

    let target: YTarget = if let Some(src) = &args.expr {
        let ast = parse_expr(src)?;
        to_target(ast, args.alpha_plus, args.alpha_minus)?
    } else if let Some(path) = &args.target_file {
        let net = network_from_json(&read_file(path)?)?;
        let label = format!("file:{}", path.display());
        let mut target = YTarget::new(label, move |x: f64| net.eval(x));
        if let Some(alpha) = args.alpha_plus {
            target = target.with_alpha_plus(alpha);
        }
        if let Some(alpha) = args.alpha_minus {
            target = target.with_alpha_minus(alpha);
        }
        target
    } else {
        bail!("one of --expr or --target-file is required");
    };

    let mut cfg = ApproxConfig::new(args.eps);
    cfg.oracle_resolution = args.resolution;
    cfg.max_knots = args.max_knots;
    cfg.initial_radius = args.initial_radius;
    cfg.alpha_schedule.tol = args.alpha_tol;
    cfg.measure_threads = thread_cap();

    let cert = relu_span::approximate(&target, &cfg)?;

    if let Some(out) = &args.out {
        write_atomic(out, &network_to_json(&cert.network))?;
    }
    if let Some(samples) = &args.samples {
        let residual = residual_target(&target, &cert.network, cert.alpha_plus, cert.alpha_minus);
        let grid = CompactGrid::new(args.resolution);
        let mut csv = String::with_capacity(grid.len() * 64);
        csv.push_str("x,target,network,weighted_residual\n");
        for x in grid.finite_xs() {
            let t = target.eval(x);
            let n = cert.network.eval(x);
            let r = residual.eval(x) / (1.0 + x.abs());
            csv.push_str(&format!("{x:.16e},{t:.16e},{n:.16e},{r:.16e}\n"));
        }
        write_atomic(samples, &csv)?;
    }

    let network_value: serde_json::Value = serde_json::from_str(&network_to_json(&cert.network))?;
    let certificate = serde_json::json!({
        "target_label": cert.target_label,
        "tolerance": cert.tolerance,
        "measured_error": cert.measured_error,
        "radius": cert.radius,
        "knot_count": cert.knot_count,
        "alpha_plus": cert.alpha_plus,
        "alpha_minus": cert.alpha_minus,
        "oracle_resolution": cert.oracle_resolution,
        "certified": cert.certified,
        "budget_exhausted": cert.budget_exhausted,
        "unit_count": cert.network.len(),
        "refinement_norms": cert.refinement_norms,
        "network": network_value,
    });

    if let Some(report_path) = &args.report {
        let mut report = RunReport::new(
            "approximate",
            serde_json::json!({
                "expr": args.expr,
                "target_file": args.target_file.as_ref().map(|p| p.display().to_string()),
                "eps": args.eps,
                "resolution": args.resolution,
                "max_knots": args.max_knots,
                "initial_radius": args.initial_radius,
            }),
        );
        report.outputs = certificate.clone();
        report.wall_time_s = start.elapsed().as_secs_f64();
        write_atomic(report_path, &report.to_json())?;
    }

    println!(
        "{} ε={}: measured_error={:.6e} units={} knots={} radius={} {}",
        cert.target_label,
        cert.tolerance,
        cert.measured_error,
        cert.network.len(),
        cert.knot_count,
        cert.radius,
        if cert.certified { "CERTIFIED" } else { "NOT CERTIFIED (budget exhausted)" }
    );

    Ok(if cert.certified { 0 } else { 2 })
}

// ---------------------------------------------------------------------
// norm
// ---------------------------------------------------------------------

enum NormInput {
    Net(ReluNetwork),
    Pl(PiecewiseLinear),
    Expr(YTarget),
}

pub fn norm(args: NormArgs) -> Result<u8> {
    let start = Instant::now();
    let input = if let Some(path) = &args.net {
        NormInput::Net(network_from_json(&read_file(path)?)?)
    } else if let Some(path) = &args.pl {
        NormInput::Pl(pl_from_json(&read_file(path)?)?)
    } else if let Some(src) = &args.expr {
        let ast = parse_expr(src)?;
        NormInput::Expr(relu_span::to_target_resolved(
            ast,
            args.alpha_plus,
            args.alpha_minus,
            &relu_span::AlphaSchedule::default(),
        )?)
    } else {
        bail!("one of --net, --pl or --expr is required");
    };

    let report = if args.exact {
        match &input {
            NormInput::Net(net) => y_norm_exact(&network_to_pl(net)),
            NormInput::Pl(pl) => y_norm_exact(pl),
            NormInput::Expr(_) => {
                bail!("--exact needs a network or piecewise-linear input; use --grid for expressions")
            }
        }
    } else if let Some(resolution) = args.grid {
        if resolution == 0 {
            bail!("--grid resolution must be positive");
        }
        let grid = CompactGrid::new(resolution);
        let threads = thread_cap();
        match &input {
            NormInput::Net(net) => y_norm_grid_threaded(net, &grid, threads)?,
            NormInput::Pl(pl) => y_norm_grid_threaded(pl, &grid, threads)?,
            NormInput::Expr(target) => y_norm_grid_threaded(target, &grid, threads)?,
        }
    } else {
        bail!("choose --exact or --grid <resolution>");
    };

    let value = norm_report_value(&report);
    println!("{value}");

    if let Some(report_path) = &args.report {
        let mut run = RunReport::new(
            "norm",
            serde_json::json!({
                "net": args.net.as_ref().map(|p| p.display().to_string()),
                "pl": args.pl.as_ref().map(|p| p.display().to_string()),
                "expr": args.expr,
                "exact": args.exact,
                "grid": args.grid,
            }),
        );
        run.outputs = value;
        run.wall_time_s = start.elapsed().as_secs_f64();
        write_atomic(report_path, &run.to_json())?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------

pub fn convert(args: ConvertArgs) -> Result<u8> {
    let start = Instant::now();
    let text = read_file(&args.input)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.input.display()))?;

    // Convert, then verify the two forms agree pointwise before writing.
    let (net, pl, direction) = if value.get("units").is_some() {
        let net = network_from_json(&text)?;
        let pl = network_to_pl(&net);
        (net, pl, "network -> piecewise-linear")
    } else if value.get("knots").is_some() {
        let pl = pl_from_json(&text)?;
        let net = pl_to_network(&pl);
        (net, pl, "piecewise-linear -> network")
    } else {
        bail!("unrecognized file shape: expected a \"units\" or \"knots\" field");
    };

    let span = pl
        .knots()
        .iter()
        .fold(10.0f64, |m, k| m.max(2.0 * k.abs()));
    let mut deviation: f64 = 0.0;
    let points = 20_000;
    for i in 0..=points {
        let x = -span + 2.0 * span * i as f64 / points as f64;
        let (a, b) = (net.eval(x), pl.eval(x));
        deviation = deviation.max((a - b).abs() / 1.0f64.max(a.abs()).max(b.abs()));
    }
    if deviation > 1e-9 {
        bail!("round-trip deviation {deviation:.3e} exceeds 1e-9; refusing to write");
    }

    let converted = if value.get("units").is_some() {
        pl_to_json(&pl)
    } else {
        network_to_json(&net)
    };
    if let Some(out) = &args.out {
        write_atomic(out, &converted)?;
    }
    println!("{direction}: round-trip deviation {deviation:.3e}");

    if let Some(report_path) = &args.report {
        let mut run = RunReport::new(
            "convert",
            serde_json::json!({
                "in": args.input.display().to_string(),
                "out": args.out.as_ref().map(|p| p.display().to_string()),
                "check": args.check,
            }),
        );
        run.outputs = serde_json::json!({
            "direction": direction,
            "round_trip_deviation": deviation,
        });
        run.wall_time_s = start.elapsed().as_secs_f64();
        write_atomic(report_path, &run.to_json())?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// verify-identity
// ---------------------------------------------------------------------

pub fn verify_identity(args: VerifyArgs) -> Result<u8> {
    let start = Instant::now();
    if !args.min_x.is_finite() || !args.max_x.is_finite() || args.min_x >= args.max_x {
        bail!("--min-x must be below --max-x");
    }

    let hat_net = if args.inject_fault {
        // Perturb the center coefficient of the hat; the check must fail.
        ReluNetwork::new(vec![
            ReluUnit::new(1.0, 0.0, 1.0).unwrap(),
            ReluUnit::new(1.0, -2.0, 1.0).unwrap(),
            ReluUnit::new(1.0, -1.0, -2.0 + 1e-6).unwrap(),
        ])
    } else {
        hat(1.0, 1.0).unwrap()
    };
    let constant_one = pl_to_network(&PiecewiseLinear::line(0.0, 1.0));
    let (f, g) = (step_f(), step_g());

    let points = 100_000usize;
    let mut dev_hat: f64 = 0.0;
    let mut dev_line: f64 = 0.0;
    let mut dev_const: f64 = 0.0;
    let mut dev_step: f64 = 0.0;
    for i in 0..=points {
        let x = args.min_x + (args.max_x - args.min_x) * i as f64 / points as f64;
        let closed_hat = (1.0 - (x - 1.0f64).abs()).max(0.0);
        dev_hat = dev_hat.max((hat_net.eval(x) - closed_hat).abs());
        dev_line = dev_line.max((relu(x) - relu(-x) - x).abs());
        dev_const = dev_const.max((constant_one.eval(x) - 1.0).abs());
        if x >= 1.0 {
            dev_step = dev_step.max((f.eval(x) - 1.0).abs());
        }
        dev_step = dev_step.max((g.eval(x) - f.eval(-x)).abs());
    }
    // Weighted boundary values: the steps vanish at ±∞, the ramps carry 1.
    let mut dev_boundary: f64 = 0.0;
    for net in [&f, &g] {
        dev_boundary = dev_boundary.max(apply_a(net, ExtendedPoint::PlusInfinity)?.abs());
        dev_boundary = dev_boundary.max(apply_a(net, ExtendedPoint::MinusInfinity)?.abs());
    }
    dev_boundary =
        dev_boundary.max((apply_a(&ramp_plus(), ExtendedPoint::PlusInfinity)? - 1.0).abs());
    dev_boundary =
        dev_boundary.max((apply_a(&ramp_minus(), ExtendedPoint::MinusInfinity)? - 1.0).abs());

    let max_dev = dev_hat.max(dev_line).max(dev_const).max(dev_step).max(dev_boundary);
    let ok = max_dev <= 1e-12;
    println!("hat identity deviation:        {dev_hat:.3e}");
    println!("line identity deviation:       {dev_line:.3e}");
    println!("constant gadget deviation:     {dev_const:.3e}");
    println!("step limits deviation:         {dev_step:.3e}");
    println!("boundary values deviation:     {dev_boundary:.3e}");
    println!("max deviation: {max_dev:.3e} ({})", if ok { "OK" } else { "VIOLATION" });

    if let Some(report_path) = &args.report {
        let mut run = RunReport::new(
            "verify-identity",
            serde_json::json!({
                "min_x": args.min_x,
                "max_x": args.max_x,
                "inject_fault": args.inject_fault,
            }),
        );
        run.outputs = serde_json::json!({
            "max_deviation": max_dev,
            "ok": ok,
        });
        run.wall_time_s = start.elapsed().as_secs_f64();
        write_atomic(report_path, &run.to_json())?;
    }

    Ok(if ok { 0 } else { 1 })
}

// ---------------------------------------------------------------------
// dual-demo
// ---------------------------------------------------------------------

pub fn dual_demo(args: DualArgs) -> Result<u8> {
    let start = Instant::now();
    let mu = measure_from_json(&read_file(&args.measure)?)?;
    let halfwidth = args.halfwidth;
    if !halfwidth.is_finite() || halfwidth <= 0.0 {
        bail!("--halfwidth must be positive");
    }

    // Hat centers covering every finite atom, spaced exactly one halfwidth.
    let finite: Vec<f64> = mu.finite_atoms().map(|(x, _)| x).collect();
    let (lo, hi) = finite.iter().fold((-2.0, 2.0), |(lo, hi): (f64, f64), &x| {
        (lo.min(x / halfwidth), hi.max(x / halfwidth))
    });
    let (lo, hi) = (lo.floor() as i64 - 1, hi.ceil() as i64 + 1);
    let centers: Vec<f64> = (lo..=hi).map(|k| k as f64 * halfwidth).collect();

    let report = annihilation_test(&mu, &centers, halfwidth, args.tol)?;

    println!(
        "measure: {} atoms ({} finite)",
        mu.atoms().len(),
        mu.finite_atoms().count()
    );
    println!(
        "step 1 — compactly supported hats (halfwidth {halfwidth}, centers {:?}..{:?}):",
        centers.first().unwrap(),
        centers.last().unwrap()
    );
    let mut max_hat: f64 = 0.0;
    for &(c, v) in &report.hat_pairings {
        if v != 0.0 {
            println!("  <mu, hat({c:?})> = {v:?}");
        }
        max_hat = max_hat.max(v.abs());
    }
    println!(
        "  max |hat pairing| = {max_hat:.3e} -> finite part {}",
        if max_hat <= args.tol { "annihilated" } else { "detected" }
    );
    for &(x, w) in &report.recovered_atoms {
        println!("  recovered atom: x = {x:?}, weight ~= {w:?}");
    }

    println!("step 2 — boundary test functions:");
    println!("  <mu, ramp_plus>  = {:?}", report.ramp_plus_pairing);
    println!("  <mu, ramp_minus> = {:?}", report.ramp_minus_pairing);
    let weighted_step = pair(&mu, &step_f())?;
    let bounded_step = pair_bounded_extension(&mu, &step_f())?;
    println!(
        "  bounded step cross-check: weighted pairing = {weighted_step:?}, bounded-extension pairing = {bounded_step:?}"
    );
    println!(
        "  boundary mass: -inf -> {:?} via ramp_minus",
        report.recovered_boundary.1
    );
    println!(
        "  boundary mass: +inf -> {:?} via ramp_plus",
        report.recovered_boundary.0
    );
    println!(
        "verdict: measure {} the span at tol {:?}",
        if report.annihilates { "annihilates" } else { "does NOT annihilate" },
        args.tol
    );

    if let Some(report_path) = &args.report {
        let mut run = RunReport::new(
            "dual-demo",
            serde_json::json!({
                "measure": args.measure.display().to_string(),
                "tol": args.tol,
                "halfwidth": halfwidth,
            }),
        );
        run.outputs = serde_json::json!({
            "annihilates": report.annihilates,
            "max_hat_pairing": max_hat,
            "ramp_plus_pairing": report.ramp_plus_pairing,
            "ramp_minus_pairing": report.ramp_minus_pairing,
            "recovered_atoms": report.recovered_atoms,
            "recovered_boundary": {
                "plus": report.recovered_boundary.0,
                "minus": report.recovered_boundary.1,
            },
        });
        run.wall_time_s = start.elapsed().as_secs_f64();
        write_atomic(report_path, &run.to_json())?;
    }

    Ok(0)
}
