use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sigmak_core::barriers::{
    barrier_sweep_sub, barrier_sweep_super, gershgorin_pairing, suph_barrier_check,
    BarrierSweepConfig, RadialTest, SweepReport,
};
use sigmak_core::bubbles::{bubble_tolerance, bubble_verify, Bubble};
use sigmak_core::comparison::{
    bg_ratio, hawking_bound, model_ball_volume, sphere_ball_volume, ModelSpace,
};
use sigmak_core::cones::{mu_plus, ConeSpec, CurvatureFunction};
use sigmak_core::conformal::DerivativeMode;
use sigmak_core::solver::{
    newton_continuation, transcript, ContinuationState, Family, NewtonOptions, PathKind,
    RadialGrid, RadialProblem, RadialProfile, Schedule,
};
use sigmak_core::Error;

use crate::config::{Campaign, Command, Derivatives, HomotopyPath, VolumeSource};
use crate::report::{flag, num, opt, Table, Tally};

/// Everything a campaign produces besides its runtime.
#[derive(Debug, Default)]
pub struct Outcome {
    pub table: Table,
    pub tally: Tally,
    /// extra files as (name suffix, contents)
    pub attachments: Vec<(String, String)>,
}

/// A campaign that could not run as configured.
#[derive(Debug)]
pub struct Misconfigured(pub String);

type Run = Result<Outcome, Misconfigured>;

/// Seed for one campaign, independent of where it sits in the file.
pub fn campaign_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ seed.rotate_left(17)
}

fn item_rng(seed: u64, n: usize, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 40) ^ ((k as u64) << 20))
}

/// Splits core errors into configuration problems and recorded failures.
fn config_or<T>(
    r: sigmak_core::Result<T>,
    tally: &mut Tally,
    item: &str,
) -> Result<Option<T>, Misconfigured> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Config(msg)) => Err(Misconfigured(format!("{item}: {msg}"))),
        Err(e) => {
            tally.fail(format!("{item}: {e}"));
            Ok(None)
        }
    }
}

pub fn run(c: &Campaign, seed: u64) -> Run {
    let seed = campaign_seed(seed, &c.id);
    match c.command {
        Command::MuPlus => mu_plus_table(c),
        Command::Bubble => bubbles(c, seed),
        Command::BarrierSub | Command::BarrierSuper => sweeps(c),
        Command::Gershgorin => gershgorin(c, seed),
        Command::Suph => suph(c),
        Command::Hawking => hawking(c),
        Command::BishopGromov => bishop_gromov(c),
        Command::SolveRadial => solve_radial(c),
        Command::SolveHomotopy => solve_homotopy(c),
    }
}

/// Runs `f` over `items` in parallel and stitches the pieces back in order.
fn gather<I, F>(items: Vec<I>, columns: &[&'static str], f: F) -> Run
where
    I: Send + Sync,
    F: Fn(&I) -> Run + Send + Sync,
{
    let parts: Vec<Run> = items.par_iter().map(&f).collect();
    let mut out = Outcome {
        table: Table::new(columns),
        ..Outcome::default()
    };
    for p in parts {
        let p = p?;
        out.table.extend(p.table);
        out.tally.absorb(p.tally);
        out.attachments.extend(p.attachments);
    }
    Ok(out)
}

fn mu_plus_table(c: &Campaign) -> Run {
    let tol = c.tolerance.unwrap_or(1e-9);
    let cols = ["n", "k", "mu_plus", "expected", "deviation", "pass"];
    gather(c.cone_pairs(), &cols, |&(n, k)| {
        let mut out = Outcome {
            table: Table::new(&cols),
            ..Outcome::default()
        };
        let Some(m) = config_or(
            ConeSpec::gamma_k(n, k).and_then(|s| mu_plus(&s)),
            &mut out.tally,
            &format!("n={n} k={k}"),
        )?
        else {
            return Ok(out);
        };
        let expected = (n - k) as f64 / k as f64;
        let dev = (m - expected).abs();
        let pass = dev < tol;
        out.tally.check(
            || format!("n={n} k={k}: deviation {dev:e}"),
            pass,
            tol - dev,
        );
        out.table.push(vec![
            n.to_string(),
            k.to_string(),
            num(m),
            num(expected),
            num(dev),
            flag(pass),
        ]);
        Ok(out)
    })
}

fn bubbles(c: &Campaign, seed: u64) -> Run {
    let p = &c.bubble;
    let cols = [
        "n",
        "k",
        "bubble",
        "a",
        "mode",
        "max_eigen_deviation",
        "max_f_deviation",
        "tolerance",
        "pass",
    ];
    let modes: Vec<DerivativeMode> = match p.derivatives {
        Derivatives::Analytic => vec![DerivativeMode::Analytic],
        Derivatives::FiniteDifference => vec![fd(p.fd_step)],
        Derivatives::Both => vec![DerivativeMode::Analytic, fd(p.fd_step)],
    };
    gather(c.cone_pairs(), &cols, |&(n, k)| {
        let mut out = Outcome {
            table: Table::new(&cols),
            ..Outcome::default()
        };
        let item = format!("n={n} k={k}");
        let Some(f) = config_or(CurvatureFunction::sigma_root(n, k), &mut out.tally, &item)? else {
            return Ok(out);
        };
        let mut rng = item_rng(seed, n, k);
        for b in 0..p.bubbles {
            let a = if p.a_max > p.a_min {
                rng.gen_range(p.a_min..p.a_max)
            } else {
                p.a_min
            };
            let centre: Vec<f64> = (0..n).map(|_| rng.gen_range(-p.p_box..=p.p_box)).collect();
            // points in the core ball |x - p| <= 1/a
            let mut samples = Vec::with_capacity(p.samples);
            while samples.len() < p.samples {
                let off: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if off.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                    samples.push(
                        centre
                            .iter()
                            .zip(&off)
                            .map(|(x, o)| x + o / a)
                            .collect::<Vec<f64>>(),
                    );
                }
            }
            let Some(bubble) = config_or(Bubble::new(a, centre), &mut out.tally, &item)? else {
                continue;
            };
            for &mode in &modes {
                let tol = c.tolerance.unwrap_or(bubble_tolerance(mode));
                let label = mode_name(mode);
                let Some(r) = config_or(
                    bubble_verify(&f, &bubble, &samples, mode),
                    &mut out.tally,
                    &item,
                )?
                else {
                    continue;
                };
                let dev = r.max_eigen_deviation.max(r.max_f_deviation);
                let pass = dev < tol;
                out.tally.check(
                    || format!("{item} bubble {b} {label}: deviation {dev:e}"),
                    pass,
                    tol - dev,
                );
                out.table.push(vec![
                    n.to_string(),
                    k.to_string(),
                    b.to_string(),
                    num(a),
                    label.to_string(),
                    num(r.max_eigen_deviation),
                    num(r.max_f_deviation),
                    num(tol),
                    flag(pass),
                ]);
            }
        }
        Ok(out)
    })
}

fn fd(h: f64) -> DerivativeMode {
    DerivativeMode::FiniteDifference {
        h,
        richardson: false,
    }
}

fn mode_name(mode: DerivativeMode) -> &'static str {
    match mode {
        DerivativeMode::Analytic => "analytic",
        DerivativeMode::FiniteDifference { .. } => "fd",
    }
}

fn sweeps(c: &Campaign) -> Run {
    let sub = c.command == Command::BarrierSub;
    let p = &c.sweep;
    let cols = ["n", "k", "delta", "mu", "eps", "r", "margin", "pass"];
    let mut pairs = Vec::new();
    for (n, k) in c.cone_pairs() {
        let cone = ConeSpec::gamma_k(n, k).map_err(|e| Misconfigured(e.to_string()))?;
        let mp = mu_plus(&cone).map_err(|e| Misconfigured(e.to_string()))?;
        // without an explicit cone list, keep the cones each barrier is built for
        if c.cones.is_empty() && (mp <= 1.0 + 1e-12) != sub {
            continue;
        }
        pairs.push((n, k, cone));
    }
    if pairs.is_empty() {
        return Err(Misconfigured(
            "no cone in the campaign suits this barrier".into(),
        ));
    }
    gather(pairs, &cols, |&(n, k, cone)| {
        let mut out = Outcome {
            table: Table::new(&cols),
            ..Outcome::default()
        };
        let item = format!("n={n} k={k}");
        let mut cfg = BarrierSweepConfig::new(n, cone);
        cfg.deltas = p.deltas.clone();
        cfg.epsilons = p.epsilons.clone();
        cfg.r_min = p.r_min;
        cfg.r_start = p.r_start;
        cfg.r_floor = p.r_floor;
        cfg.r_nodes = p.r_nodes;
        cfg.directions = p.directions;
        cfg.background = p.background;
        cfg.tolerance = c.tolerance.unwrap_or(0.0);
        let rep: sigmak_core::Result<SweepReport> = if sub {
            barrier_sweep_sub(&cfg)
        } else {
            cfg.mus = if p.mus.is_empty() {
                BarrierSweepConfig::default_mus(&cone, 3)
                    .map_err(|e| Misconfigured(e.to_string()))?
            } else {
                p.mus.clone()
            };
            barrier_sweep_super(&cfg)
        };
        let Some(rep) = config_or(rep, &mut out.tally, &item)? else {
            return Ok(out);
        };
        for case in &rep.cases {
            let margin = if sub {
                -case.worst_margin
            } else {
                case.worst_margin
            };
            out.tally.check(
                || {
                    format!(
                        "{item} delta={} mu={} eps={}: worst margin {:e}, r1 {}",
                        case.delta,
                        opt(case.mu),
                        opt(case.eps),
                        case.worst_margin,
                        opt(case.r1)
                    )
                },
                case.pass,
                margin,
            );
        }
        for row in rep.rows() {
            out.table.push(vec![
                row.n.to_string(),
                row.k.to_string(),
                num(row.delta),
                opt(row.mu),
                opt(row.eps),
                num(row.r),
                num(row.margin),
                flag(row.pass),
            ]);
        }
        Ok(out)
    })
}

fn gershgorin(c: &Campaign, seed: u64) -> Run {
    let p = &c.gershgorin;
    let cols = [
        "n",
        "pair",
        "perturbation",
        "total_deviation",
        "row_sum_bound",
        "bound",
        "within_bound",
    ];
    gather(c.dims.clone(), &cols, |&n| {
        let mut out = Outcome {
            table: Table::new(&cols),
            ..Outcome::default()
        };
        let mut rng = item_rng(seed, n, 0);
        let (lo, hi) = p.log10_scale;
        for i in 0..p.pairs {
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let m = (&a + a.transpose()) * 0.5;
            let eps = 10f64.powf(if hi > lo { rng.gen_range(lo..hi) } else { lo });
            let d = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-eps..eps));
            let mt = &m + (&d + d.transpose()) * 0.5;
            let Some(pr) = config_or(
                gershgorin_pairing(&m, &mt),
                &mut out.tally,
                &format!("n={n} pair {i}"),
            )?
            else {
                continue;
            };
            out.tally.check(
                || {
                    format!(
                        "n={n} pair {i}: deviation {:e} above bound {:e}",
                        pr.total_deviation, pr.bound
                    )
                },
                pr.within_bound,
                (pr.bound - pr.total_deviation) / pr.bound.max(f64::MIN_POSITIVE),
            );
            out.table.push(vec![
                n.to_string(),
                i.to_string(),
                num(pr.perturbation),
                num(pr.total_deviation),
                num(pr.row_sum_bound),
                num(pr.bound),
                flag(pr.within_bound),
            ]);
        }
        Ok(out)
    })
}

fn suph(c: &Campaign) -> Run {
    let p = &c.suph;
    let cols = ["n", "function", "quantity", "value", "pass"];
    gather(c.dims.clone(), &cols, |&n| {
        let mut out = Outcome {
            table: Table::new(&cols),
            ..Outcome::default()
        };
        let item = format!("n={n}");
        let Some(g) = config_or(p.background.metric(n), &mut out.tally, &item)? else {
            return Ok(out);
        };
        let tests = RadialTest::defaults(n);
        let Some(rep) = config_or(
            suph_barrier_check(&g, p.k, p.delta, p.r_inner, p.nodes, &tests),
            &mut out.tally,
            &item,
        )?
        else {
            return Ok(out);
        };
        let row =
            |out: &mut Outcome, name: &str, quantity: &str, value: f64, pass: bool, margin: f64| {
                out.tally.check(
                    || format!("{item} {name}: {quantity} = {value:e}"),
                    pass,
                    margin,
                );
                out.table.push(vec![
                    n.to_string(),
                    name.to_string(),
                    quantity.to_string(),
                    num(value),
                    flag(pass),
                ]);
            };
        let l = rep.min_conformal_laplacian;
        row(
            &mut out,
            "comparison",
            "min conformal laplacian",
            l,
            l >= 0.0,
            l,
        );
        row(
            &mut out,
            "comparison",
            "min value",
            rep.min_g,
            rep.min_g >= 0.0,
            rep.min_g,
        );
        if let Some(e) = rep.flat_closed_form_error {
            let tol = c.tolerance.unwrap_or(1e-6);
            row(
                &mut out,
                "comparison",
                "flat closed form error",
                e,
                e < tol,
                tol - e,
            );
        }
        for r in &rep.ratios {
            // the ratio test only constrains superharmonic functions
            let pass = !r.superharmonic || r.ratio_increasing;
            row(
                &mut out,
                &r.name,
                "max scaled conformal laplacian",
                r.max_scaled_laplacian,
                true,
                f64::NAN,
            );
            row(
                &mut out,
                &r.name,
                "ratio nondecreasing",
                if r.ratio_increasing { 1.0 } else { 0.0 },
                pass,
                f64::NAN,
            );
        }
        Ok(out)
    })
}

/// Radius at which `α coth(αρ)` drops to `c₀`, by bisection.
fn hawking_reference(alpha: f64, c0: f64) -> f64 {
    let h = |rho: f64| {
        if alpha == 0.0 {
            1.0 / rho
        } else {
            alpha / (alpha * rho).tanh()
        }
    };
    let (mut lo, mut hi) = (1e-300, 1.0);
    while h(hi) > c0 {
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > c0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn hawking(c: &Campaign) -> Run {
    let p = &c.hawking;
    let tol = c.tolerance.unwrap_or(1e-10);
    let mut out = Outcome {
        table: Table::new(&[
            "case",
            "alpha",
            "c0",
            "bound",
            "reference",
            "deviation",
            "pass",
        ]),
        ..Outcome::default()
    };
    let record =
        |out: &mut Outcome, case: &str, alpha: f64, c0: f64, reference: f64, exact: bool| {
            let item = format!("{case} alpha={alpha} c0={c0}");
            let Some(b) = config_or(hawking_bound(alpha, c0), &mut out.tally, &item)? else {
                return Ok::<Option<f64>, Misconfigured>(None);
            };
            let dev = (b - reference).abs() / reference.abs().max(1.0);
            let pass = if exact { b == reference } else { dev < tol };
            out.tally
                .check(|| format!("{item}: deviation {dev:e}"), pass, tol - dev);
            out.table.push(vec![
                case.to_string(),
                num(alpha),
                num(c0),
                num(b),
                num(reference),
                num(dev),
                flag(pass),
            ]);
            Ok(Some(b))
        };
    for &alpha in &p.alphas {
        let mut prev: Option<f64> = None;
        for &c0 in p.c0s.iter().filter(|&&c0| c0 > alpha) {
            let b = if alpha == 0.0 {
                record(&mut out, "flat", alpha, c0, 1.0 / c0, true)?
            } else {
                record(
                    &mut out,
                    "grid",
                    alpha,
                    c0,
                    hawking_reference(alpha, c0),
                    false,
                )?
            };
            if let (Some(a), Some(b)) = (prev, b) {
                out.tally.check(
                    || format!("alpha={alpha}: bound not decreasing at c0={c0}"),
                    b < a,
                    a - b,
                );
            }
            prev = b.or(prev);
        }
    }
    for &rho in &p.ball_radii {
        record(&mut out, "euclidean-ball", 0.0, 1.0 / rho, rho, false)?;
        record(
            &mut out,
            "hyperbolic-ball",
            1.0,
            1.0 / rho.tanh(),
            rho,
            false,
        )?;
    }
    Ok(out)
}

fn bishop_gromov(c: &Campaign) -> Run {
    let p = &c.bishop_gromov;
    let tol = c.tolerance.unwrap_or(1e-10);
    let cols = ["n", "source", "r", "volume", "model_volume", "ratio"];
    let items: Vec<(usize, VolumeSource)> = c
        .dims
        .iter()
        .flat_map(|&n| p.sources.iter().map(move |&s| (n, s)))
        .collect();
    gather(items, &cols, |&(n, source)| {
        let mut out = Outcome {
            table: Table::new(&cols),
            ..Outcome::default()
        };
        let name = match source {
            VolumeSource::Sphere => "sphere",
            VolumeSource::Model => "model",
        };
        let item = format!("n={n} {name}");
        let Some(model) = config_or(ModelSpace::new(n, p.alpha), &mut out.tally, &item)? else {
            return Ok(out);
        };
        let volumes = |r: f64| match source {
            VolumeSource::Sphere => sphere_ball_volume(n, r),
            VolumeSource::Model => model_ball_volume(&model, r),
        };
        let Some(table) = config_or(bg_ratio(volumes, &model, &p.radii), &mut out.tally, &item)?
        else {
            return Ok(out);
        };
        out.tally.check(
            || format!("{item}: ratio increases"),
            table.nonincreasing,
            f64::NAN,
        );
        if source == VolumeSource::Model {
            for row in &table.rows {
                let dev = (row.ratio - 1.0).abs();
                out.tally.check(
                    || format!("{item} r={}: ratio {:e}", row.r, row.ratio),
                    dev < tol,
                    tol - dev,
                );
            }
        }
        if let Some(small) = config_or(bg_ratio(volumes, &model, &[1e-4]), &mut out.tally, &item)? {
            let dev = (small.rows[0].ratio - 1.0).abs();
            out.tally.check(
                || format!("{item}: small-ball ratio {:e}", small.rows[0].ratio),
                dev < 1e-6,
                1e-6 - dev,
            );
        }
        for row in &table.rows {
            out.table.push(vec![
                n.to_string(),
                name.to_string(),
                num(row.r),
                num(row.volume),
                num(row.model_volume),
                num(row.ratio),
            ]);
        }
        Ok(out)
    })
}

const TRANSCRIPT: [&str; 9] = [
    "n",
    "k",
    "step",
    "s",
    "t",
    "residual",
    "min_u",
    "max_u",
    "cone_margin",
];

fn newton_options(c: &Campaign) -> NewtonOptions {
    NewtonOptions {
        tol: c.solver.newton_tol,
        max_iter: c.solver.max_iter,
        ..NewtonOptions::default()
    }
}

/// Records a continuation path, checking every state on it.
fn record_path(
    out: &mut Outcome,
    id: &str,
    item: &str,
    (n, k): (usize, usize),
    states: &[ContinuationState],
    tol: f64,
) {
    for st in states {
        let res = st.residual_norm;
        out.tally.check(
            || format!("{item} {:?}: residual {res:e}", st.family),
            res <= tol,
            tol - res,
        );
        if let Some(m) = st.margins.min_cone_margin {
            out.tally.check(
                || format!("{item} {:?}: cone margin {m:e}", st.family),
                m > 0.0,
                m,
            );
        }
        let ric = st.margins.min_ricci_margin;
        if st.family.uses_cone() {
            out.tally.check(
                || format!("{item} {:?}: Ricci margin {ric:e}", st.family),
                ric >= 0.0,
                ric,
            );
        }
    }
    for row in transcript(states) {
        out.table.push(vec![
            n.to_string(),
            k.to_string(),
            row.step.to_string(),
            opt(row.s),
            opt(row.t),
            num(row.residual),
            num(row.min_u),
            num(row.max_u),
            opt(row.cone_margin),
        ]);
    }
    if let Some(last) = states.last() {
        let mut text = Vec::new();
        last.profile
            .write_text(&mut text)
            .expect("writing to memory");
        out.attachments.push((
            format!("{id}.n{n}.k{k}.profile"),
            String::from_utf8(text).expect("ascii"),
        ));
    }
}

fn solver_setup(c: &Campaign, n: usize, k: usize) -> sigmak_core::Result<RadialProblem> {
    let f = CurvatureFunction::sigma_root(n, k)?;
    let grid = Arc::new(RadialGrid::new(c.solver.grid, c.solver.nodes, n)?);
    RadialProblem::new(f, grid)
}

fn solve_radial(c: &Campaign) -> Run {
    let opts = newton_options(c);
    gather(c.cone_pairs(), &TRANSCRIPT, |&(n, k)| {
        let mut out = Outcome {
            table: Table::new(&TRANSCRIPT),
            ..Outcome::default()
        };
        let item = format!("n={n} k={k}");
        let Some(problem) = config_or(solver_setup(c, n, k), &mut out.tally, &item)? else {
            return Ok(out);
        };
        let amp = c.solver.amplitude;
        let start = RadialProfile::from_fn(problem.grid.clone(), |t| 1.0 + amp * t.cos());
        let s0 = 2.0 / (n as f64 - 2.0);
        let Some(first) = config_or(
            ContinuationState::solve(&problem, Family::Fs { s: s0 }, &start, &opts),
            &mut out.tally,
            &item,
        )?
        else {
            return Ok(out);
        };
        match newton_continuation(
            &problem,
            first,
            &[Schedule::s_path(n, c.solver.steps)],
            &opts,
        ) {
            Ok(states) => record_path(&mut out, &c.id, &item, (n, k), &states, opts.tol),
            Err(fail) => {
                record_path(&mut out, &c.id, &item, (n, k), &fail.states, opts.tol);
                out.tally.fail(format!("{item}: {fail}"));
            }
        }
        Ok(out)
    })
}

fn solve_homotopy(c: &Campaign) -> Run {
    let opts = newton_options(c);
    let (family, kind) = match c.solver.path {
        HomotopyPath::Gt => (Family::Gt { t: 0.0 }, PathKind::Gt),
        HomotopyPath::Ht => (Family::Ht { t: 0.0 }, PathKind::Ht),
    };
    gather(c.cone_pairs(), &TRANSCRIPT, |&(n, k)| {
        let mut out = Outcome {
            table: Table::new(&TRANSCRIPT),
            ..Outcome::default()
        };
        let item = format!("n={n} k={k}");
        let Some(problem) = config_or(solver_setup(c, n, k), &mut out.tally, &item)? else {
            return Ok(out);
        };
        let Some(level) = config_or(family.constant_solution(n), &mut out.tally, &item)? else {
            return Ok(out);
        };
        let start = RadialProfile::constant(problem.grid.clone(), level);
        let Some(first) = config_or(
            ContinuationState::at(&problem, family, start),
            &mut out.tally,
            &item,
        )?
        else {
            return Ok(out);
        };
        match newton_continuation(
            &problem,
            first,
            &[Schedule::t_path(kind, c.solver.steps)],
            &opts,
        ) {
            Ok(states) => record_path(&mut out, &c.id, &item, (n, k), &states, opts.tol),
            Err(fail) => {
                record_path(&mut out, &c.id, &item, (n, k), &fail.states, opts.tol);
                out.tally.fail(format!("{item}: {fail}"));
            }
        }
        Ok(out)
    })
}
