use std::fs;

use serde_json::{json, Value};
use skellam_stein::graph::{self, NoisyGraphModel};
use skellam_stein::haar::{self, HaarSpilloverModel};
use skellam_stein::sampling::stream_rng;
use skellam_stein::stein::{self, Difference, IntegralForm};
use skellam_stein::tv::{concentration_threshold, empirical_dist, tv_distance};
use skellam_stein::{BivariateState, Error, Result, SkellamParams, TestSet};

use crate::output::{num, object, to_value, Report, Table};
use crate::{Cli, Command, DistCmd, RateArgs, SteinCmd, VerifyCmd};

/// Confidence level behind the Monte Carlo thresholds.
const MC_DELTA: f64 = 1e-3;

pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Dist(c) => dist(c, cli.seed),
        Command::Stein(c) => stein_cmd(c),
        Command::Verify(c) => verify(c, cli.seed),
    }
}

fn params(r: &RateArgs) -> Result<SkellamParams<f64>> {
    if r.extended {
        SkellamParams::extended(r.l1, r.l2)
    } else {
        SkellamParams::new(r.l1, r.l2)
    }
}

fn rate_json(r: &RateArgs) -> Value {
    json!({ "l1": r.l1, "l2": r.l2, "extended": r.extended })
}

fn dist(c: &DistCmd, seed: u64) -> Result<Report> {
    match c {
        DistCmd::Pmf { rates, k } => {
            let p = params(rates)?;
            let mut ps = rate_json(rates);
            ps["k"] = json!(k);
            Ok(Report::new("dist pmf", ps, json!({}), json!({ "pmf": p.pmf(*k) })))
        }
        DistCmd::Table { rates, tol } => {
            let d = params(rates)?.to_dist(*tol)?;
            let mut table = Table::new(vec!["k", "pmf"]);
            for (k, v) in d.iter() {
                table.push(vec![json!(k), json!(v)]);
            }
            let result = json!({
                "min_support": d.min_support(),
                "max_support": d.max_support(),
                "window_mass": d.window_mass(),
                "tail_mass": d.tail_mass(),
            });
            Ok(Report::new("dist table", rate_json(rates), json!({ "tail_tol": tol }), result).with_table(table))
        }
        DistCmd::Sample { rates, n } => {
            let p = params(rates)?;
            let draws = p.sample(&mut stream_rng(seed, 0), *n);
            let mut table = Table::new(vec!["draw", "value"]);
            for (i, v) in draws.iter().enumerate() {
                table.push(vec![json!(i), json!(v)]);
            }
            let mut ps = rate_json(rates);
            ps["n"] = json!(n);
            let (m, var) = p.moments();
            let result = json!({ "mean": m, "variance": var });
            Ok(Report::new("dist sample", ps, json!({}), result)
                .with_seed(seed)
                .with_table(table))
        }
    }
}

fn stein_cmd(c: &SteinCmd) -> Result<Report> {
    match c {
        SteinCmd::Bounds { rates, quad_tol } => {
            let p = params(rates)?;
            let prior = if p.lambda1() == p.lambda2() && p.lambda1() > 0.0 {
                let (ours, prior) = stein::prior_bound_comparison(p.lambda1())?;
                json!({ "second_diff": ours, "prior": prior })
            } else {
                Value::Null
            };
            let result = json!({
                "first_diff": stein::bound_first_diff(&p),
                "second_diff": stein::bound_second_diff(&p),
                "first_diff_integral": stein::bound_first_diff_integral(&p, IntegralForm::Min, *quad_tol)?,
                "first_diff_integral_as_printed": stein::bound_first_diff_integral(&p, IntegralForm::AsPrinted, *quad_tol)?,
                "first_diff_asymptote": num(stein::first_diff_asymptote(&p)),
                "relaxed_first_diff": stein::bound_relaxed(&p, 1),
                "relaxed_second_diff": stein::bound_relaxed(&p, 2),
                "prior_comparison": prior,
            });
            Ok(Report::new("stein bounds", rate_json(rates), json!({ "quad_tol": quad_tol }), result))
        }
        SteinCmd::Solve {
            rates,
            set,
            x,
            y,
            quad_tol,
        } => {
            let p = params(rates)?;
            let f: TestSet = set.parse()?;
            let h = stein::stein_solution(&p, &f, BivariateState::new(*x, *y), *quad_tol)?;
            let mut ps = rate_json(rates);
            ps["set"] = json!(f.to_string());
            ps["x"] = json!(x);
            ps["y"] = json!(y);
            Ok(Report::new("stein solve", ps, json!({ "quad_tol": quad_tol }), json!({ "h": h })))
        }
        SteinCmd::Factors {
            rates,
            order,
            grid,
            saturation,
            quad_tol,
        } => factors(rates, *order, *grid, *saturation, *quad_tol),
        SteinCmd::Conjecture { rates, tol } => {
            let p = params(rates)?;
            let r = stein::skellam_second_diff_sum(&p, *tol)?;
            Ok(Report::new("stein conjecture", rate_json(rates), json!({ "tail_tol": tol }), to_value(&r)))
        }
    }
}

fn factors(rates: &RateArgs, order: Option<u8>, grid: Option<u64>, saturation: bool, quad_tol: f64) -> Result<Report> {
    let p = params(rates)?;
    let grid = grid.unwrap_or_else(|| stein::default_state_grid(&p));
    let all = stein::exact_stein_factors(&p, grid, quad_tol)?;
    let doubled = if saturation {
        Some(stein::exact_stein_factors(&p, 2 * grid, quad_tol)?)
    } else {
        None
    };
    let integral = stein::bound_first_diff_integral(&p, IntegralForm::Min, quad_tol)?;
    let mut violation = false;
    let mut table = Table::new(vec![
        "difference",
        "value",
        "slack",
        "argmax_x",
        "argmax_y",
        "bound",
        "relaxed_bound",
        "integral_bound",
        "dominated",
        "doubled_grid_change",
    ]);
    for d in Difference::ALL.iter().copied().filter(|d| order.is_none_or(|o| d.order() == o)) {
        let f = all.get(d);
        let (bound, relaxed, integ) = if d.order() == 1 {
            (stein::bound_first_diff(&p), stein::bound_relaxed(&p, 1), Some(integral))
        } else {
            (stein::bound_second_diff(&p), stein::bound_relaxed(&p, 2), None)
        };
        let tightest = integ.map_or(bound, |i| i.min(bound)).min(relaxed);
        let dominated = f.value <= tightest + f.slack;
        violation |= !dominated;
        let change = doubled.as_ref().map(|g| (g.get(d).value - f.value).abs());
        table.push(vec![
            json!(d.label()),
            json!(f.value),
            json!(f.slack),
            json!(f.argmax.x),
            json!(f.argmax.y),
            json!(bound),
            json!(relaxed),
            integ.map_or(Value::Null, |v| json!(v)),
            json!(dominated),
            change.map_or(Value::Null, |v| json!(v)),
        ]);
    }
    let mut ps = rate_json(rates);
    ps["grid"] = json!(grid);
    ps["order"] = json!(order);
    ps["saturation"] = json!(saturation);
    let result = json!({ "all_dominated": !violation });
    let mut report = Report::new("stein factors", ps, json!({ "quad_tol": quad_tol }), result).with_table(table);
    report.violation = violation;
    Ok(report)
}

fn read(path: &std::path::Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn verify(c: &VerifyCmd, seed: u64) -> Result<Report> {
    match c {
        VerifyCmd::Graph {
            model,
            homogeneous,
            trials,
        } => {
            let (m, source) = match (model, homogeneous) {
                (Some(path), _) => (NoisyGraphModel::<f64>::from_json(&read(path)?)?, json!(path.display().to_string())),
                (None, Some(v)) => {
                    let bad = |s: &String| Error::Parse(format!("{s:?} is not a number"));
                    let n: usize = v[0].parse().map_err(|_| bad(&v[0]))?;
                    let x: Vec<f64> = v[1..]
                        .iter()
                        .map(|s| s.parse().map_err(|_| bad(s)))
                        .collect::<Result<_>>()?;
                    (
                        NoisyGraphModel::homogeneous(n, x[0], x[1], x[2])?,
                        json!({ "n": n, "p": x[0], "r": x[1], "s": x[2] }),
                    )
                }
                (None, None) => unreachable!("clap requires one model source"),
            };
            let report = m.verify()?;
            let mut result = to_value(&report);
            if *trials > 0 {
                let draws = m.simulate(&mut stream_rng(seed, 0), *trials);
                let exact = m.edge_difference_dist()?;
                let tv = tv_distance(&empirical_dist::<f64>(&draws)?, &exact);
                result["monte_carlo"] = json!({
                    "trials": trials,
                    "tv_to_exact": tv.value,
                    "threshold": concentration_threshold(*trials, MC_DELTA),
                });
            }
            let ps = json!({ "model": source, "trials": trials });
            let tol = json!({ "skellam_tail_tol": graph::SKELLAM_TAIL_TOL });
            let mut out = Report::new("verify graph", ps, tol, result).with_seed(seed);
            out.violation = !report.check.satisfied;
            Ok(out)
        }
        VerifyCmd::Haar {
            signal,
            p,
            scale,
            loc,
            pos,
            neg,
            sweep,
            trials,
        } => {
            let f = haar::parse_signal::<f64>(&read(signal)?)?;
            let n = f.len();
            let mut ps = json!({ "signal": signal.display().to_string(), "bins": n, "p": p, "trials": trials });
            let tol = json!({ "skellam_tail_tol": haar::SKELLAM_TAIL_TOL });
            if let Some(scales) = sweep {
                ps["sweep"] = json!(scales);
                return haar_sweep(&f, scales, *p, ps, tol, seed);
            }
            let model = match (scale, loc, pos, neg) {
                (Some(s), Some(l), _, _) => {
                    ps["scale"] = json!(s);
                    ps["loc"] = json!(l);
                    HaarSpilloverModel::dyadic(f, *s, *l, *p)?
                }
                (_, _, Some(pi), Some(ni)) => {
                    ps["pos"] = json!(pi);
                    ps["neg"] = json!(ni);
                    let mask = |idx: &[usize]| -> Result<Vec<bool>> {
                        let mut m = vec![false; n];
                        for &i in idx {
                            *m.get_mut(i).ok_or_else(|| Error::InvalidModel(format!("bin {i} outside 0..{n}")))? =
                                true;
                        }
                        Ok(m)
                    };
                    HaarSpilloverModel::new(f, mask(pi)?, mask(ni)?, *p)?
                }
                _ => return Err(Error::Parse("give --scale and --loc, --pos and --neg, or --sweep".into())),
            };
            let report = model.verify()?;
            let mut result = haar_json(&report);
            if *trials > 0 {
                let (truth, observed) = model.simulate_spillover(&mut stream_rng(seed, 0), *trials);
                let t = empirical_dist::<f64>(&truth)?;
                let o = empirical_dist::<f64>(&observed)?;
                let exact_t = model.true_coeff_params().to_dist(haar::SKELLAM_TAIL_TOL)?;
                let exact_o = model.observed_coeff_params().to_dist(haar::SKELLAM_TAIL_TOL)?;
                result["monte_carlo"] = json!({
                    "trials": trials,
                    "tv_true_to_law": tv_distance(&t, &exact_t).value,
                    "tv_observed_to_law": tv_distance(&o, &exact_o).value,
                    "threshold": concentration_threshold(*trials, MC_DELTA),
                });
            }
            let mut out = Report::new("verify haar", ps, tol, result).with_seed(seed);
            out.violation = !report.check.satisfied;
            Ok(out)
        }
    }
}

fn haar_json(r: &haar::HaarReport<f64>) -> Value {
    let mut v = to_value(r);
    v["bound"] = num(r.check.bound);
    v
}

fn haar_sweep(f: &[f64], scales: &[u32], p: f64, ps: Value, tol: Value, seed: u64) -> Result<Report> {
    let entries = haar::sweep(f, scales, p)?;
    let mut table = Table::new(vec!["scale", "location", "tv", "tv_slack", "bound", "satisfied", "ratio"]);
    let mut violation = false;
    for e in &entries {
        let c = &e.report.check;
        violation |= !c.satisfied;
        table.push(vec![
            json!(e.scale),
            json!(e.location),
            json!(c.tv.value),
            json!(c.tv.slack),
            num(c.bound),
            json!(c.satisfied),
            json!(c.ratio),
        ]);
    }
    let result = object(vec![
        ("windows", json!(entries.len())),
        ("all_satisfied", json!(!violation)),
    ]);
    let mut out = Report::new("verify haar", ps, tol, result).with_seed(seed).with_table(table);
    out.violation = violation;
    Ok(out)
}
