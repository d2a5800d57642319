use lattice_kpp::kernel_suite::verify_kernel;
use lattice_kpp::model::validate_kpp;
use lattice_kpp::simulator::{
    empirical_speed, integrate, make_initial, wave_profile_from_states, IntegrateOptions,
    LatticeState, StepSize,
};
use lattice_kpp::{
    beta0, big_gamma, eta0, optimal_beta, spreading_speed, steady_state, sweep, BirthLaw, Error,
    ModelParams, SweepParameter,
};

use crate::config::{RunConfig, Spacing};
use crate::output::{display, num, opt, OutputDir};
use crate::{CliError, Command};

/// Runs `command` and returns the summary lines meant for stdout.
pub fn run_command(command: Command, cfg: RunConfig) -> Result<Vec<String>, CliError> {
    let out = OutputDir::create(&cfg, command)?;
    match command {
        Command::Speed => speed(&cfg, &out),
        Command::OptimalBeta => optimal(&cfg, &out),
        Command::Sweep => sweep_cmd(&cfg, &out),
        Command::Simulate => simulate(&cfg, &out),
        Command::KernelVerify => kernel(&cfg, &out),
    }
}

/// Fails with a regime error unless the birth law has the KPP structure on `(0, w*]`.
fn require_kpp(p: &ModelParams, f: &BirthLaw) -> Result<Vec<String>, CliError> {
    let report = validate_kpp(f, p)?;
    if !report.is_ok() {
        let list: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("{:?} from w = {} ({} grid points)", v.check, v.first_w, v.count))
            .collect();
        return Err(CliError::Regime(format!("birth law is not KPP: {}", list.join("; "))));
    }
    Ok(report.warnings.into_iter().map(|w| format!("warning: {w}")).collect())
}

fn speed(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<String>, CliError> {
    let p = cfg.params();
    let beta = cfg.speed.beta.unwrap_or(cfg.beta);
    let p = p.with_beta(beta);
    let b0 = beta0(&p, &cfg.birth)?;
    if !(beta < b0) {
        return Err(CliError::Regime(format!(
            "beta = {beta} is not below beta0 = {b0}; no spreading for this dispersal rate"
        )));
    }
    let mut lines = require_kpp(&p, &cfg.birth)?;
    let r = spreading_speed(beta, &p, &cfg.birth)?;
    let path = out.write_csv(
        "speed.csv",
        &[
            "beta",
            "beta0",
            "c_star",
            "mu_star",
            "lambda",
            "residual_f",
            "residual_stationarity",
            "multiple_minima",
        ],
        [vec![
            num(beta),
            num(b0),
            num(r.c_star),
            num(r.mu_star),
            num(r.lambda_at_min),
            num(r.residual_f),
            num(r.residual_stationarity),
            r.multiple_minima.to_string(),
        ]],
    )?;
    lines.extend([
        format!("beta = {beta} (beta0 = {b0})"),
        format!("c* = {}", num(r.c_star)),
        format!("mu* = {}", num(r.mu_star)),
        format!("residual_F = {:e}", r.residual_f),
        format!("residual_stationarity = {:e}", r.residual_stationarity),
        format!("wrote {}", display(&path)),
    ]);
    if r.multiple_minima {
        lines.push("warning: more than one local minimum of lambda(mu)/mu".into());
    }
    Ok(lines)
}

fn optimal(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<String>, CliError> {
    let p = cfg.params();
    let o = optimal_beta(&p, &cfg.birth)?;
    let at = if cfg.optimal_beta.check_speed {
        Some(spreading_speed(o.beta1, &p, &cfg.birth)?.c_star)
    } else {
        None
    };
    let path = out.write_csv(
        "optimal.csv",
        &["beta1", "beta0", "lambda_star", "mu_bar", "c_max", "residual_g", "c_star_at_beta1"],
        [vec![
            num(o.beta1),
            num(o.beta0),
            num(o.lambda_star),
            num(o.mu_bar),
            num(o.c_max),
            num(o.residual_g),
            opt(at),
        ]],
    )?;
    let mut lines = vec![
        format!("beta1 = {}", num(o.beta1)),
        format!("beta0 = {}", num(o.beta0)),
        format!("lambda* = {}", num(o.lambda_star)),
        format!("mu_bar = {}", num(o.mu_bar)),
        format!("c_max = {}", num(o.c_max)),
    ];
    if let Some(c) = at {
        lines.push(format!("c*(beta1) = {}", num(c)));
    }
    lines.push(format!("wrote {}", display(&path)));
    Ok(lines)
}

fn grid(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Vec<f64> {
    let step = |k: usize| k as f64 / (n - 1) as f64;
    match spacing {
        Spacing::Linear => (0..n).map(|k| lo + (hi - lo) * step(k)).collect(),
        Spacing::Log => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|k| (a + (b - a) * step(k)).exp()).collect()
        }
    }
}

/// Default range of each sweep parameter.
fn default_range(param: SweepParameter, p: &ModelParams, f: &BirthLaw) -> Result<(f64, f64), CliError> {
    Ok(match param {
        SweepParameter::Beta => {
            let b0 = beta0(p, f)?;
            if !(b0 > 0.0) {
                return Err(Error::NonInvadable {
                    fprime0: f.slope_at_zero(),
                    gamma: p.gamma,
                }
                .into());
            }
            (0.02 * b0, 0.98 * b0)
        }
        SweepParameter::Eta => {
            let e0 = eta0(p, f)?;
            if e0.is_finite() {
                (e0 / 21.0, 20.0 * e0 / 21.0)
            } else {
                (0.01, 10.0)
            }
        }
        SweepParameter::FPrime0 => {
            let g = big_gamma(p);
            (1.05 * g, 10.0 * g)
        }
    })
}

fn sweep_cmd(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<String>, CliError> {
    let p = cfg.params();
    let sc = &cfg.sweep;
    let values = match &sc.values {
        Some(v) => v.clone(),
        None => {
            let (lo, hi) = match (sc.start, sc.stop) {
                (Some(a), Some(b)) => (a, b),
                (a, b) => {
                    let (dlo, dhi) = default_range(sc.parameter, &p, &cfg.birth)?;
                    (a.unwrap_or(dlo), b.unwrap_or(dhi))
                }
            };
            grid(lo, hi, sc.points, sc.spacing)
        }
    };
    let table = sweep(sc.parameter, &values, &p, &cfg.birth)?;
    let name = sc.parameter.name();
    let path = out.write_csv(
        "sweep.csv",
        &[name, "c_star", "mu_star", "regime"],
        table.rows.iter().map(|r| {
            vec![num(r.value), opt(r.c_star), opt(r.mu_star), r.regime.flag().to_string()]
        }),
    )?;
    let ok = table.speeds().len();
    let mut lines = vec![
        format!("{} points over {name}, {ok} in the spreading regime", table.rows.len()),
        format!("wrote {}", display(&path)),
    ];
    if cfg.output.plot_script {
        let script = format!(
            "set datafile separator ','\n\
             set xlabel '{name}'\n\
             set ylabel 'c*'\n\
             set grid\n\
             plot 'sweep.csv' skip 2 using 1:2 with linespoints title 'spreading speed'\n"
        );
        let gp = out.write_commented("sweep.gp", &script)?;
        lines.push(format!("wrote {}", display(&gp)));
    }
    Ok(lines)
}

fn simulate(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<String>, CliError> {
    let p = cfg.params();
    let f = cfg.birth;
    let s = &cfg.simulate;
    let mut lines = require_kpp(&p, &f)?;
    let ss = steady_state(&p, &f)?;
    let c_star = spreading_speed(p.beta, &p, &f)?.c_star;

    let step = match s.dt {
        Some(cap) => StepSize::at_most(cap, p.tau),
        None => StepSize::stable(&p, &f),
    };
    let history = make_initial(
        s.initial,
        (-s.half_width, s.half_width),
        (-s.support_half_width, s.support_half_width),
        s.amplitude,
        &p,
        &f,
        step,
    )?;
    let opts = IntegrateOptions {
        scheme: s.scheme,
        sample_interval: s.sample_interval,
        front_level: s.level,
        front_margin: s.front_margin,
        check_invariant: s.check_invariant,
        stop_at_boundary: false,
        keep_snapshots: true,
        reference: Some(ss),
    };
    let traj = integrate(history, s.horizon, &p, &f, &opts)?;

    let half_step = 0.5 * step.dt;
    let on_grid = |t: f64, every: f64| {
        let k = (t / every).round();
        (t - k * every).abs() <= half_step
    };
    let traj_path = out.write_csv(
        "trajectory.csv",
        &["time", "site", "u"],
        traj.snapshots
            .iter()
            .filter(|st| on_grid(st.time, s.trajectory_interval))
            .flat_map(|st| st.field.sites().map(move |(i, v)| vec![num(st.time), i.to_string(), num(v)])),
    )?;
    let front_path = out.write_csv(
        "front.csv",
        &["time", "position"],
        traj.front
            .times
            .iter()
            .zip(&traj.front.positions)
            .map(|(t, x)| vec![num(*t), num(*x)]),
    )?;

    let fit = empirical_speed(&traj.front, s.fit_fraction)?;
    let from = s.profile_start.unwrap_or(0.75 * s.horizon);
    let late: Vec<&LatticeState> = traj.snapshots.iter().filter(|st| st.time >= from - half_step).collect();
    let profile = wave_profile_from_states(&late, fit.speed, (s.profile_xi[0], s.profile_xi[1]))?;
    let profile_path = out.write_csv(
        "profile.csv",
        &["parity", "xi", "u", "envelope"],
        (0..2).flat_map(|par| {
            profile.samples[par]
                .iter()
                .zip(&profile.envelope[par])
                .map(move |((xi, u), e)| vec![par.to_string(), num(*xi), num(*u), num(*e)])
        }),
    )?;
    let gap = (fit.speed - c_star) / c_star;
    let cmp_path = out.write_csv(
        "comparison.csv",
        &[
            "c_empirical",
            "stderr",
            "samples",
            "c_star",
            "relative_gap",
            "periodicity_defect",
            "defect_over_w_star",
            "left_even",
            "left_odd",
            "right_even",
            "right_odd",
            "w_star",
            "v_star",
        ],
        [vec![
            num(fit.speed),
            num(fit.stderr),
            fit.samples.to_string(),
            num(c_star),
            num(gap),
            num(profile.periodicity_defect),
            num(profile.periodicity_defect / ss.w_star),
            num(profile.left_limit[0]),
            num(profile.left_limit[1]),
            num(profile.right_limit[0]),
            num(profile.right_limit[1]),
            num(ss.w_star),
            num(ss.v_star),
        ]],
    )?;
    lines.extend([
        format!("dt = {}, steps per delay = {}", num(step.dt), step.delay_steps),
        format!("c_empirical = {} +- {:e} ({} samples)", num(fit.speed), fit.stderr, fit.samples),
        format!("c* = {}", num(c_star)),
        format!("relative gap = {gap:.4}"),
        format!(
            "periodicity defect = {:e} ({:.3}% of w*)",
            profile.periodicity_defect,
            100.0 * profile.periodicity_defect / ss.w_star
        ),
    ]);
    for path in [traj_path, front_path, profile_path, cmp_path] {
        lines.push(format!("wrote {}", display(&path)));
    }
    Ok(lines)
}

fn kernel(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<String>, CliError> {
    let k = &cfg.kernel_verify;
    let checks = verify_kernel(&cfg.params(), &k.times, k.half_width)?;
    let path = out.write_csv(
        "kernel_report.csv",
        &["check", "t", "passed", "worst", "tolerance", "informational"],
        checks.iter().map(|c| {
            vec![
                c.name.to_string(),
                num(c.t),
                c.passed.to_string(),
                num(c.worst),
                num(c.tolerance),
                c.informational.to_string(),
            ]
        }),
    )?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} at t = {}: {:e} > {:e}", c.name, c.t, c.worst, c.tolerance))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Failed(format!(
            "kernel checks failed (report in {}): {}",
            display(&path),
            failed.join("; ")
        )));
    }
    Ok(vec![
        format!("{} kernel checks passed", checks.len()),
        format!("wrote {}", display(&path)),
    ])
}
