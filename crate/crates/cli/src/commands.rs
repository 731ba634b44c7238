use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Value};

use numeraire::catalog::{get_model_with, list, CatalogEntry};
use numeraire::extended::{format_rational, parse_rational, ExactValue};
use numeraire::lattice::{
    bayes_check, martingale_transfer_check, mass_support, parity_and_equivalence_report, price_on_tree,
    superreplicate_backward, verify_numeraire_identity, DualTree, Event, StoppingRule,
    TerminalFunctional, TreeClaim, TreeSpec,
};
use numeraire::physical::{build_physical, consistency_checks};
use numeraire::pricing::{
    defect_on_batches, intl_on_batches, parity_on_batches, price_on_batches, simulate_pair, Claim,
};
use numeraire::sde::{Batch, Scheme, SimConfig};

use crate::config::{Command, ExperimentConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NUMERAIRE_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "numeraire-out";
const Z_LIMIT: f64 = 3.0;

pub struct Report {
    pub passed: bool,
    pub json: Value,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.mc.validate().map_err(|e| anyhow!("{e}"))?;
    let out = out_dir(cfg)?;
    let (passed, result) = match cfg.command {
        Command::Price => price(cfg, &out)?,
        Command::Parity => parity(cfg, &out)?,
        Command::Intl => intl(cfg, &out)?,
        Command::Defect => defect(cfg, &out)?,
        Command::LatticeVerify => lattice_verify(cfg, &out)?,
        Command::Physical => physical(cfg, &out)?,
        Command::Convergence => convergence(cfg, &out)?,
        Command::Catalog => catalog(&out)?,
    };
    let json = json!({
        "command": cfg.command.to_string(),
        "config": cfg,
        "passed": passed,
        "result": result,
    });
    let name = cfg.command.to_string().replace('-', "_");
    write_json(&out.join(format!("{name}.json")), &json)?;
    Ok(Report { passed, json })
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn model(cfg: &ExperimentConfig) -> Result<CatalogEntry> {
    let name = cfg
        .model
        .as_deref()
        .ok_or_else(|| anyhow!("{} needs a model (--model)", cfg.command))?;
    Ok(get_model_with(name, cfg.x0.unwrap_or(1.0), cfg.horizon.unwrap_or(1.0))?)
}

fn strikes(cfg: &ExperimentConfig, default: &[f64]) -> Result<Vec<f64>> {
    if cfg.strikes.is_empty() {
        return Ok(default.to_vec());
    }
    cfg.strikes
        .iter()
        .map(|s| {
            let text = s.text();
            text.parse::<f64>()
                .ok()
                .or_else(|| parse_rational(&text).ok().map(|r| ExactValue::Finite(r).to_f64()))
                .filter(|k| k.is_finite())
                .ok_or_else(|| anyhow!("bad strike {text:?}"))
        })
        .collect()
}

fn pair(cfg: &ExperimentConfig, entry: &CatalogEntry, out: &Path) -> Result<(Batch, Batch)> {
    let (d, e) = simulate_pair(&entry.model, &cfg.mc)?;
    if cfg.dump_samples {
        for (b, name) in [(&d, "samples_dollar.csv"), (&e, "samples_euro.csv")] {
            let path = out.join(name);
            let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
            b.write_csv(file)?;
        }
    }
    Ok((d, e))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn price(cfg: &ExperimentConfig, out: &Path) -> Result<(bool, Value)> {
    let entry = model(cfg)?;
    let claim = Claim::parse(cfg.claim.as_deref().unwrap_or("euro_forward"))?;
    let (d, e) = pair(cfg, &entry, out)?;
    let rec = price_on_batches(&entry.model, &claim, &d, &e)?.record();
    write_csv(
        &out.join("price.csv"),
        &[
            "claim",
            "K",
            "classical",
            "classical_se",
            "correction",
            "correction_se",
            "total_dollar",
            "total_euro",
            "analytic_infinite",
        ],
        &[vec![
            rec.claim.clone(),
            opt(rec.strike),
            num(rec.classical),
            num(rec.classical_se),
            opt(rec.correction),
            opt(rec.correction_se),
            num(rec.total_dollar),
            num(rec.total_euro),
            rec.flags.analytic_infinite.to_string(),
        ]],
    )?;
    Ok((true, json!({ "model": entry.model.name, "price": rec })))
}

fn parity(cfg: &ExperimentConfig, out: &Path) -> Result<(bool, Value)> {
    let entry = model(cfg)?;
    let ks = strikes(cfg, &[0.5, 1.0, 2.0])?;
    let (d, e) = pair(cfg, &entry, out)?;
    let rows = parity_on_batches(&entry.model, &ks, &d, &e)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.strike),
                num(r.call),
                num(r.call_se),
                num(r.put),
                num(r.put_se),
                num(r.residual.value),
                num(r.residual.stderr),
                num(r.residual.z),
                num(r.classical_violation.mean),
                num(r.classical_violation.stderr),
                num(r.correction_mass.mean),
                num(r.correction_mass.stderr),
            ]
        })
        .collect();
    write_csv(
        &out.join("parity.csv"),
        &[
            "K",
            "call",
            "call_se",
            "put",
            "put_se",
            "residual",
            "residual_se",
            "residual_z",
            "classical_violation",
            "classical_violation_se",
            "correction_mass",
            "correction_mass_se",
        ],
        &csv_rows,
    )?;
    let passed = rows.iter().all(|r| r.residual.within(Z_LIMIT));
    Ok((passed, json!({ "model": entry.model.name, "rows": rows })))
}

fn intl(cfg: &ExperimentConfig, out: &Path) -> Result<(bool, Value)> {
    let entry = model(cfg)?;
    let ks = strikes(cfg, &[0.5, 1.0, 2.0])?;
    let (d, e) = pair(cfg, &entry, out)?;
    let rows = intl_on_batches(&entry.model, &ks, &d, &e)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.strike),
                num(r.call_residual.value),
                num(r.call_residual.stderr),
                num(r.call_residual.z),
                num(r.put_residual.value),
                num(r.put_residual.stderr),
                num(r.put_residual.z),
            ]
        })
        .collect();
    write_csv(
        &out.join("intl.csv"),
        &["K", "call_residual", "call_se", "call_z", "put_residual", "put_se", "put_z"],
        &csv_rows,
    )?;
    let passed = rows
        .iter()
        .all(|r| r.call_residual.within(Z_LIMIT) && r.put_residual.within(Z_LIMIT));
    Ok((passed, json!({ "model": entry.model.name, "rows": rows })))
}

fn defect(cfg: &ExperimentConfig, out: &Path) -> Result<(bool, Value)> {
    let entry = model(cfg)?;
    let (d, e) = pair(cfg, &entry, out)?;
    let r = defect_on_batches(&entry.model, &d, &e)?;
    let passed = r.z.abs() <= Z_LIMIT;
    Ok((
        passed,
        json!({
            "model": entry.model.name,
            "defect": r.defect,
            "dual_mass": r.dual_mass,
            "z": r.z,
            "strict": r.strict,
            "reference_dual_absorption": entry.reference("dual_absorption"),
        }),
    ))
}

fn load_tree(cfg: &ExperimentConfig) -> Result<DualTree> {
    let path = cfg
        .tree
        .as_ref()
        .ok_or_else(|| anyhow!("{} needs a tree file (--tree)", cfg.command))?;
    let text = fs::read_to_string(path).with_context(|| format!("cannot read tree file {}", path.display()))?;
    let spec: TreeSpec =
        serde_json::from_str(&text).with_context(|| format!("invalid tree file {}", path.display()))?;
    Ok(DualTree::build(&spec)?)
}

fn rational_strikes(cfg: &ExperimentConfig, tree: &DualTree) -> Result<Vec<BigRational>> {
    if cfg.strikes.is_empty() {
        let half = parse_rational("1/2")?;
        return Ok(vec![half, parse_rational("1")?, parse_rational("2")?, tree.x0().clone()]);
    }
    cfg.strikes
        .iter()
        .map(|s| {
            let text = s.text();
            parse_rational(&text).map_err(|_| anyhow!("bad strike {text:?}; use p/q or a decimal"))
        })
        .collect()
}

fn lattice_verify(cfg: &ExperimentConfig, out: &Path) -> Result<(bool, Value)> {
    let tree = load_tree(cfg)?;
    let mut nonzero = Vec::new();

    let mut identity_checks = 0;
    for t in 0..=tree.periods() {
        let tau = StoppingRule::at_time(&tree, t);
        let mut events = vec![Event::everything(&tree)];
        events.extend(tau.atoms(&tree).into_keys().map(|s| Event::through([s])));
        for a in &events {
            identity_checks += 1;
            let res = verify_numeraire_identity(&tree, a, &tau)?;
            if !res.is_zero() {
                nonzero.push(format!("numeraire identity at time {t}: {}", format_rational(&res)));
            }
        }
    }

    let mut bayes_checks = 0;
    for s in 0..=tree.periods() {
        for t in s..=tree.periods() {
            let rho = StoppingRule::at_time(&tree, s);
            let tau = StoppingRule::at_time(&tree, t);
            let capped = TerminalFunctional::at_stop(&tree, &tau, |n| match tree.node(n).x.clone() {
                ExactValue::Infinite => ExactValue::one(),
                x if x > ExactValue::one() => ExactValue::one(),
                x => x,
            });
            for y in [TerminalFunctional::constant(&tree, ExactValue::one()), capped] {
                for row in bayes_check(&tree, &y, &rho, &tau)? {
                    bayes_checks += 1;
                    if !row.residual().is_zero() {
                        nonzero.push(format!("Bayes formula at node {} ({s}→{t})", tree.node(row.node).label));
                    }
                }
            }
        }
    }

    let ks = rational_strikes(cfg, &tree)?;
    let rows = parity_and_equivalence_report(&tree, &ks)?;
    for r in rows.iter().filter(|r| !r.residuals_vanish()) {
        nonzero.push(format!("parity/equivalence at K={}", format_rational(&r.strike)));
    }
    write_csv(
        &out.join("lattice_parity.csv"),
        &[
            "K",
            "call",
            "put",
            "parity_residual",
            "intl_call_residual",
            "intl_put_residual",
            "classical_violation",
            "correction_mass",
        ],
        &rows
            .iter()
            .map(|r| {
                [
                    &r.strike,
                    &r.call,
                    &r.put,
                    &r.parity_residual,
                    &r.intl_call_residual,
                    &r.intl_put_residual,
                    &r.classical_violation,
                    &r.correction_mass,
                ]
                .into_iter()
                .map(format_rational)
                .collect()
            })
            .collect::<Vec<_>>(),
    )?;

    let x0 = tree.x0().clone();
    let claims = [
        ("euro_forward", TreeClaim::euro_forward(&tree)),
        ("call_x0", TreeClaim::call(&tree, &x0)),
        ("put_x0", TreeClaim::put(&tree, &x0)),
    ];
    let mut prices = Vec::new();
    for (name, claim) in &claims {
        let p = price_on_tree(&tree, claim)?;
        if p.total_euro != p.euro_price {
            nonzero.push(format!("Dollar and Euro prices of {name} disagree"));
        }
        let (cost, strategy) = superreplicate_backward(&tree, claim)?;
        let covers = strategy.covers(&tree, claim, &mass_support(&tree));
        if cost != p.total_dollar || !covers {
            nonzero.push(format!(
                "superreplication of {name}: LP cost {} vs formula {}",
                format_rational(&cost),
                format_rational(&p.total_dollar)
            ));
        }
        prices.push(json!({
            "claim": name,
            "price": p,
            "superreplication_cost": format_rational(&cost),
            "strategy_covers": covers,
        }));
    }

    let x: Vec<ExactValue> = tree.nodes().iter().map(|n| n.x.clone()).collect();
    let (dollar_mg, euro_mg) = martingale_transfer_check(&tree, &x, &StoppingRule::terminal(&tree))?;
    if dollar_mg != euro_mg {
        nonzero.push("martingale transfer answers disagree".into());
    }

    let passed = nonzero.is_empty();
    Ok((
        passed,
        json!({
            "nodes": tree.len(),
            "periods": tree.periods(),
            "complete": tree.is_complete(),
            "identity_checks": identity_checks,
            "bayes_checks": bayes_checks,
            "parity": rows,
            "prices": prices,
            "x_is_dollar_martingale": dollar_mg,
            "inverse_is_euro_martingale": euro_mg,
            "failures": nonzero,
        }),
    ))
}

fn physical(cfg: &ExperimentConfig, _out: &Path) -> Result<(bool, Value)> {
    let tree = load_tree(cfg)?;
    let pl = build_physical(&tree)?;
    let report = consistency_checks(&pl)?;
    Ok((report.all_passed(), serde_json::to_value(&report)?))
}

fn convergence(cfg: &ExperimentConfig, out: &Path) -> Result<(bool, Value)> {
    let entry = model(cfg)?;
    let m = &entry.model;
    if m.exact_scheme.is_none() {
        bail!("model {} has no exact scheme to converge to", m.name);
    }
    let claim = Claim::parse(cfg.claim.as_deref().unwrap_or("euro_forward"))?;
    let steps_list = if cfg.steps_list.is_empty() {
        vec![16, 64, 256]
    } else {
        cfg.steps_list.clone()
    };
    let exact_cfg = SimConfig {
        scheme: Scheme::Exact,
        ..cfg.mc.clone()
    };
    let (d, e) = simulate_pair(m, &exact_cfg)?;
    let exact = price_on_batches(m, &claim, &d, &e)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for steps in steps_list {
        let euler_cfg = SimConfig {
            steps,
            scheme: Scheme::EulerAbsorbed,
            ..cfg.mc.clone()
        };
        let (d, e) = simulate_pair(m, &euler_cfg)?;
        let p = price_on_batches(m, &claim, &d, &e)?;
        let diff = (p.total() - exact.total()).abs();
        rows.push(vec![
            steps.to_string(),
            num(p.total()),
            num(p.total_se),
            num(exact.total()),
            num(exact.total_se),
            num(diff),
        ]);
        table.push(json!({
            "steps": steps,
            "euler_total": p.total(),
            "euler_se": p.total_se,
            "abs_diff": diff,
        }));
    }
    write_csv(
        &out.join("convergence.csv"),
        &["steps", "euler_total", "euler_se", "exact_total", "exact_se", "abs_diff"],
        &rows,
    )?;
    let diffs: Vec<f64> = table.iter().filter_map(|r| r["abs_diff"].as_f64()).collect();
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    Ok((
        true,
        json!({
            "model": m.name,
            "claim": claim.label(),
            "exact_total": exact.total(),
            "exact_se": exact.total_se,
            "levels": table,
            "decreasing": decreasing,
        }),
    ))
}

fn catalog(out: &Path) -> Result<(bool, Value)> {
    let entries: Vec<Value> = list()
        .into_iter()
        .map(|e| {
            json!({
                "name": e.model.name,
                "x0": e.model.x0,
                "horizon": e.model.horizon,
                "zero_attainable": e.model.zero_attainable,
                "exact_scheme": e.model.exact_scheme.map(|s| s.name()),
                "dual_payoff_flags": e.model.dual_payoff_flags,
                "references": e.references,
                "notes": e.notes,
            })
        })
        .collect();
    write_csv(
        &out.join("catalog.csv"),
        &["name", "exact_scheme", "zero_attainable"],
        &list()
            .into_iter()
            .map(|e| {
                vec![
                    e.model.name.clone(),
                    e.model.exact_scheme.map(|s| s.name().to_string()).unwrap_or_default(),
                    e.model.zero_attainable.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    Ok((true, Value::Array(entries)))
}
