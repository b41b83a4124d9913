//! Named, config-driven runs producing tabular reports.

pub mod config;
pub mod report;

use rayon::prelude::*;
use thiserror::Error;

pub use config::{ConfigError, Format, RunConfig, Scenario, CSV_CONFIG_PREFIX};
pub use report::{write_atomic, Cell, Report};

use crate::analytic::{
    self, linear_swap_fidelity, sfg_efficiency_theory, sfg_swap_figures, DeviceSpec,
};
use crate::optics::DetectorModel;
use crate::optimize::{self, key_fraction_model, LinkScenario};
use crate::protocol::{
    fit_fidelity_slope, simulate_linear_swap, simulate_sfg_swap, LinearSwapSetup, SfgSwapSetup,
    TruncationConfig,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] crate::Error),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Runtime(crate::Error::InvalidParameter { .. }) => 2,
            _ => 1,
        }
    }
}

type Outcome<T> = std::result::Result<T, RunError>;

/// Parses `text` and runs the scenario it names.
pub fn run_text(text: &str) -> Outcome<Report> {
    run(&RunConfig::parse(text)?)
}

pub fn run(cfg: &RunConfig) -> Outcome<Report> {
    let mut report = match cfg.scenario {
        Scenario::SwapLinear => swap_linear(cfg),
        Scenario::SwapSfg => swap_sfg(cfg),
        Scenario::HeraldedCompare => heralded_compare(cfg),
        Scenario::SfgEfficiency => sfg_efficiency(cfg),
        Scenario::DiqkdRate => diqkd_rate(cfg),
        Scenario::OptimizeSixphoton => optimize_sixphoton(cfg),
        Scenario::RequiredSfg => required_sfg(cfg),
        Scenario::Fig4Theory => fig4_theory(cfg),
    }?;
    report.config = cfg.lines();
    Ok(report)
}

/// Cartesian product of `lists` in lexicographic order.
fn product(lists: &[Vec<f64>]) -> Vec<Vec<f64>> {
    lists.iter().fold(vec![Vec::new()], |acc, list| {
        acc.iter()
            .flat_map(|prefix| {
                list.iter().map(move |&x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect()
    })
}

fn truncation(cfg: &RunConfig) -> Outcome<TruncationConfig> {
    let d = TruncationConfig::default();
    Ok(TruncationConfig {
        per_mode_cutoff: cfg.u8_or("per_mode_cutoff", d.per_mode_cutoff)?,
        total_cutoff: cfg.u8_or("total_cutoff", d.total_cutoff)?,
        max_pairs: cfg.u8_or("max_pairs", d.max_pairs)?,
    })
}

fn swap_linear(cfg: &RunConfig) -> Outcome<Report> {
    let grid = product(&[
        cfg.require_list("p_ab")?,
        cfg.require_list("p_cd")?,
        cfg.list_or("eta_d", 1.0)?,
    ]);
    let number_resolving = match cfg.raw("detector").unwrap_or("threshold") {
        "threshold" => false,
        "number-resolving" => true,
        other => {
            return Err(ConfigError::bad(
                "detector",
                other,
                "expected threshold or number-resolving",
            )
            .into())
        }
    };
    let truncation = truncation(cfg)?;
    let coherent = cfg.bool_or("coherent_sources", false)?;
    let allow = cfg.bool_or("allow_truncation", false)?;

    let results = grid
        .par_iter()
        .map(|v| {
            let detector = if number_resolving {
                DetectorModel::number_resolving(v[2])?
            } else {
                DetectorModel::threshold(v[2])?
            };
            let setup = LinearSwapSetup {
                detector,
                truncation,
                coherent_sources: coherent,
                ..LinearSwapSetup::new(v[0], v[1])
            };
            let r = simulate_linear_swap(&setup)?;
            if !allow {
                r.truncation.check()?;
            }
            Ok(r)
        })
        .collect::<crate::Result<Vec<_>>>()?;

    let mut rep = Report::new(
        "swap-linear",
        &[
            "p_ab",
            "p_cd",
            "eta_d",
            "P",
            "P_normalized",
            "F",
            "w_aa",
            "w_dd",
            "w_signal",
            "F_formula",
            "truncation_weight",
        ],
    );
    for (v, r) in grid.iter().zip(&results) {
        rep.push(vec![
            v[0].into(),
            v[1].into(),
            v[2].into(),
            r.probability.into(),
            r.probability_normalized.into(),
            r.fidelity.into(),
            r.w_aa.into(),
            r.w_dd.into(),
            r.w_signal.into(),
            linear_swap_fidelity(v[0], v[1]).into(),
            r.truncation.weight.into(),
        ]);
    }
    Ok(rep)
}

fn swap_sfg(cfg: &RunConfig) -> Outcome<Report> {
    let couplings = match (cfg.list("g")?, cfg.list("eta_sfg")?) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::bad(
                "g",
                cfg.raw("g").unwrap_or(""),
                "give either g or eta_sfg, not both",
            )
            .into())
        }
        (Some(g), None) => g,
        (None, Some(eta)) => {
            if let Some(bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
                return Err(
                    ConfigError::bad("eta_sfg", &bad.to_string(), "must lie in [0, 1]").into(),
                );
            }
            eta.iter().map(|e| e.sqrt()).collect()
        }
        (None, None) => return Err(cfg.missing("eta_sfg").into()),
    };
    let grid = product(&[
        cfg.require_list("p_ab")?,
        cfg.require_list("p_cd")?,
        couplings,
        cfg.list_or("eta_c", 1.0)?,
        cfg.list_or("eta_d", 1.0)?,
    ]);
    let truncation = truncation(cfg)?;
    let coherent = cfg.bool_or("coherent_sources", false)?;
    let allow = cfg.bool_or("allow_truncation", false)?;

    let results = grid
        .par_iter()
        .map(|v| {
            let setup = SfgSwapSetup {
                eta_c: v[3],
                eta_d: v[4],
                truncation,
                coherent_sources: coherent,
                ..SfgSwapSetup::new(v[0], v[1], v[2])
            };
            let r = simulate_sfg_swap(&setup)?;
            if !allow {
                r.truncation.check()?;
            }
            Ok(r)
        })
        .collect::<crate::Result<Vec<_>>>()?;

    let mut rep = Report::new(
        "swap-sfg",
        &[
            "p_ab",
            "p_cd",
            "eta_sfg",
            "eta_c",
            "eta_d",
            "P",
            "P_plus",
            "P_minus",
            "P_normalized",
            "F",
            "F_plus",
            "P_formula",
            "F_formula",
            "truncation_weight",
        ],
    );
    for (v, r) in grid.iter().zip(&results) {
        let p = (v[0] * v[1]).sqrt();
        let (f_formula, p_formula) = sfg_swap_figures(p, v[3], v[3] * v[4], v[2] * v[2]);
        rep.push(vec![
            v[0].into(),
            v[1].into(),
            (v[2] * v[2]).into(),
            v[3].into(),
            v[4].into(),
            r.probability.into(),
            r.probability_plus.into(),
            r.probability_minus.into(),
            r.probability_normalized.into(),
            r.fidelity.into(),
            r.fidelity_plus.into(),
            p_formula.into(),
            f_formula.into(),
            r.truncation.weight.into(),
        ]);
    }

    // Slope of 1 − F against p for each (η_SFG, η_c, η_d) over the symmetric rows.
    type Group = ((u64, u64, u64), Vec<(f64, f64)>);
    let mut groups: Vec<Group> = Vec::new();
    for (v, r) in grid.iter().zip(&results) {
        if v[0] != v[1] || r.probability == 0.0 {
            continue;
        }
        let key = (v[2].to_bits(), v[3].to_bits(), v[4].to_bits());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push((v[0], r.fidelity)),
            None => groups.push((key, vec![(v[0], r.fidelity)])),
        }
    }
    for ((g, ec, ed), pts) in groups {
        if pts.len() < 3 {
            continue;
        }
        let fit = fit_fidelity_slope(&pts);
        rep.notes.push(format!(
            "eta_sfg={:e} eta_c={} eta_d={}: F = 1 - c*p with c = {:.6} (through origin), c = {:.6} (with p^2 term)",
            f64::from_bits(g).powi(2),
            f64::from_bits(ec),
            f64::from_bits(ed),
            fit.linear,
            fit.quadratic.0
        ));
    }
    Ok(rep)
}

fn heralded_compare(cfg: &RunConfig) -> Outcome<Report> {
    let eta_c = cfg.require_f64("eta_c")?;
    let eta_d = cfg.require_f64("eta_d")?;
    let f_min = cfg.require_f64("f_min")?;
    let eta = eta_c * eta_d;
    let opt = optimize::optimize_sixphoton(eta, f_min)?;
    let req = optimize::required_sfg_efficiency(opt.success, f_min, eta_c, eta_d)?;

    let mut rep = Report::new(
        "heralded-compare",
        &["scheme", "eta", "p", "cos2_theta", "eta_sfg", "F", "P"],
    );
    rep.push(vec![
        "six-photon".into(),
        eta.into(),
        opt.p.into(),
        opt.cos2_theta.into(),
        Cell::Empty,
        opt.fidelity.into(),
        opt.success.into(),
    ]);
    let (f, p) = sfg_swap_figures(req.p, eta_c, eta, req.eta_sfg_min);
    rep.push(vec![
        "sfg-break-even".into(),
        eta.into(),
        req.p.into(),
        Cell::Empty,
        req.eta_sfg_min.into(),
        f.into(),
        p.into(),
    ]);
    if let Some(eta_sfg) = cfg.f64("eta_sfg")? {
        let (f, p) = sfg_swap_figures(req.p, eta_c, eta, eta_sfg);
        rep.push(vec![
            "sfg".into(),
            eta.into(),
            req.p.into(),
            Cell::Empty,
            eta_sfg.into(),
            f.into(),
            p.into(),
        ]);
    }
    if opt.boundary_active {
        rep.notes
            .push("six-photon optimum lies on the edge of the search domain".into());
    }
    Ok(rep)
}

fn device(cfg: &RunConfig) -> Outcome<DeviceSpec> {
    let mut dev = match cfg.raw("device") {
        Some(name) => DeviceSpec::from_catalog(name).ok_or_else(|| {
            ConfigError::bad("device", name, "expected measured, commercial or research")
        })?,
        None => {
            for key in config::DEVICE_KEYS {
                if !cfg.has(key) {
                    return Err(cfg.missing(key).into());
                }
            }
            DeviceSpec {
                name: "custom".into(),
                reference_eta_sfg: None,
                ..DeviceSpec::measured()
            }
        }
    };
    dev.eta_hat_pct_per_w_cm2 = cfg.f64_or("eta_hat_pct_per_w_cm2", dev.eta_hat_pct_per_w_cm2)?;
    dev.delta_nu_hat_ghz_cm = cfg.f64_or("delta_nu_hat_ghz_cm", dev.delta_nu_hat_ghz_cm)?;
    dev.length_cm = cfg.f64_or("length_cm", dev.length_cm)?;
    dev.lambda_nm = cfg.f64_or("lambda_nm", dev.lambda_nm)?;
    dev.tbp = cfg.f64_or("tbp", dev.tbp)?;
    if let Some(r) = cfg.f64("reference_eta_sfg")? {
        dev.reference_eta_sfg = Some(r);
    }
    Ok(dev)
}

fn sfg_efficiency(cfg: &RunConfig) -> Outcome<Report> {
    let dev = device(cfg)?;
    let e = sfg_efficiency_theory(&dev)?;
    let mut rep = Report::new(
        "sfg-efficiency",
        &[
            "device",
            "eta_hat_pct_per_w_cm2",
            "delta_nu_hat_ghz_cm",
            "length_cm",
            "lambda_nm",
            "tbp",
            "delta_nu_hz",
            "P_pump_w",
            "eta_sfg_th",
            "reference_eta_sfg",
            "ratio_to_reference",
        ],
    );
    rep.push(vec![
        dev.name.clone().into(),
        dev.eta_hat_pct_per_w_cm2.into(),
        dev.delta_nu_hat_ghz_cm.into(),
        dev.length_cm.into(),
        dev.lambda_nm.into(),
        dev.tbp.into(),
        e.delta_nu_hz.into(),
        e.pump_power_w.into(),
        e.eta_sfg.into(),
        dev.reference_eta_sfg.into(),
        dev.reference_eta_sfg.map(|r| e.eta_sfg / r).into(),
    ]);
    Ok(rep)
}

fn diqkd_rate(cfg: &RunConfig) -> Outcome<Report> {
    let model_name = cfg.raw("key_fraction_model").unwrap_or("none");
    let constant = cfg.f64("key_fraction")?;
    let model = match model_name {
        "none" => None,
        "chsh" | "constant" => Some(
            key_fraction_model(model_name, constant).ok_or_else(|| cfg.missing("key_fraction"))?,
        ),
        other => {
            return Err(ConfigError::bad(
                "key_fraction_model",
                other,
                "expected none, chsh or constant",
            )
            .into())
        }
    };
    let include_alice_coupling = cfg.bool_or("include_alice_coupling", false)?;
    let grid = product(&[
        cfg.require_list("distance_km")?,
        cfg.require_list("atten_db_per_km")?,
        cfg.require_list("rep_rate")?,
        cfg.require_list("eta_c")?,
        cfg.require_list("eta_d")?,
        cfg.require_list("eta_sfg")?,
        cfg.require_list("p_ab")?,
        cfg.require_list("p_cd")?,
    ]);
    let mut rep = Report::new(
        "diqkd-rate",
        &[
            "distance_km",
            "atten_db_per_km",
            "rep_rate",
            "eta_c",
            "eta_d",
            "eta_sfg",
            "p_ab",
            "p_cd",
            "transmission",
            "herald_probability",
            "heralds_per_min",
            "F",
            "key_fraction",
            "bits_per_min",
        ],
    );
    for v in grid {
        let s = LinkScenario {
            distance_km: v[0],
            atten_db_per_km: v[1],
            rep_rate: v[2],
            eta_c: v[3],
            eta_d: v[4],
            eta_sfg: v[5],
            p_ab: v[6],
            p_cd: v[7],
            include_alice_coupling,
        };
        let r = optimize::diqkd_rate(&s, model.as_deref())?;
        let mut row: Vec<Cell> = v.iter().map(|&x| x.into()).collect();
        row.extend([
            analytic::fiber_transmission(v[0], v[1])?.into(),
            r.herald_probability.into(),
            r.heralds_per_min.into(),
            r.fidelity.into(),
            r.key_fraction.into(),
            r.bits_per_min.into(),
        ]);
        rep.push(row);
    }
    if let Some(m) = &model {
        rep.notes.push(format!(
            "bits_per_min depends on the {} key-fraction model",
            m.name()
        ));
    }
    Ok(rep)
}

fn optimize_sixphoton(cfg: &RunConfig) -> Outcome<Report> {
    let grid = product(&[cfg.require_list("eta")?, cfg.require_list("f_min")?]);
    let mut rep = Report::new(
        "optimize-sixphoton",
        &[
            "eta",
            "f_min",
            "p",
            "cos2_theta",
            "theta",
            "F",
            "P",
            "boundary_active",
            "constraint_active",
            "refinement_steps",
            "grid_points",
        ],
    );
    for v in grid {
        let o = optimize::optimize_sixphoton(v[0], v[1])?;
        rep.push(vec![
            o.eta.into(),
            o.f_min.into(),
            o.p.into(),
            o.cos2_theta.into(),
            o.theta.into(),
            o.fidelity.into(),
            o.success.into(),
            o.boundary_active.into(),
            o.constraint_active.into(),
            o.refinement_steps.into(),
            Cell::Int(o.grid_points as i64),
        ]);
    }
    Ok(rep)
}

fn required_sfg(cfg: &RunConfig) -> Outcome<Report> {
    let grid = product(&[
        cfg.require_list("f_min")?,
        cfg.require_list("eta_c")?,
        cfg.require_list("eta_d")?,
    ]);
    let from_optimizer = cfg.raw("p_target") == Some("optimize");
    let targets = if from_optimizer {
        vec![f64::NAN]
    } else {
        cfg.require_list("p_target")?
    };
    let mut rep = Report::new(
        "required-sfg",
        &[
            "p_target",
            "f_min",
            "eta_c",
            "eta_d",
            "eta",
            "p",
            "eta_sfg_min",
        ],
    );
    for v in grid {
        for &t in &targets {
            let target = if from_optimizer {
                optimize::optimize_sixphoton(v[1] * v[2], v[0])?.success
            } else {
                t
            };
            let r = optimize::required_sfg_efficiency(target, v[0], v[1], v[2])?;
            rep.push(vec![
                target.into(),
                v[0].into(),
                v[1].into(),
                v[2].into(),
                (v[1] * v[2]).into(),
                r.p.into(),
                r.eta_sfg_min.into(),
            ]);
        }
    }
    if from_optimizer {
        rep.notes
            .push("p_target is the six-photon optimum at eta = eta_c*eta_d".into());
    }
    Ok(rep)
}

fn fig4_theory(cfg: &RunConfig) -> Outcome<Report> {
    let dev = device(cfg)?;
    let photons = cfg.require_list("photons_per_mode")?;
    if let Some(bad) = photons.iter().find(|n| **n < 0.0) {
        return Err(
            ConfigError::bad("photons_per_mode", &bad.to_string(), "must be non-negative").into(),
        );
    }
    let e = sfg_efficiency_theory(&dev)?;
    let mut rep = Report::new(
        "fig4-theory",
        &[
            "photons_per_mode",
            "eta_sfg_th",
            "eta_sfg_measured",
            "eta_sfg_measured_err",
        ],
    );
    for n in photons {
        rep.push(vec![
            n.into(),
            e.eta_sfg.into(),
            analytic::MEASURED_ETA_SFG.into(),
            analytic::MEASURED_ETA_SFG_UNCERTAINTY.into(),
        ]);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_is_lexicographic() {
        let g = product(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(
            g,
            vec![
                vec![1.0, 3.0],
                vec![1.0, 4.0],
                vec![2.0, 3.0],
                vec![2.0, 4.0]
            ]
        );
        assert_eq!(product(&[vec![1.0], vec![]]), Vec::<Vec<f64>>::new());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_text("scenario=nope").unwrap_err().exit_code(), 2);
        let e = run_text("scenario=optimize-sixphoton\neta=1.5\nf_min=0.9").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run_text("scenario=optimize-sixphoton\neta=0.6\nf_min=0.99999").unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn fig4_rows_are_constant() {
        let r =
            run_text("scenario=fig4-theory\ndevice=measured\nphotons_per_mode=0.1,1,10").unwrap();
        let col = r.column("eta_sfg_th").unwrap();
        assert_eq!(col.len(), 3);
        assert!(col.iter().all(|c| *c == col[0]));
        assert_eq!(r.value(0, "eta_sfg_measured"), Some(1.2e-8));
        let empty = run_text("scenario=fig4-theory\ndevice=measured\nphotons_per_mode=").unwrap();
        assert!(empty.rows.is_empty());
        assert_eq!(
            empty
                .to_csv()
                .lines()
                .filter(|l| !l.starts_with('#'))
                .count(),
            1
        );
    }

    #[test]
    fn custom_device_needs_every_parameter() {
        let e = run_text("scenario=sfg-efficiency\neta_hat_pct_per_w_cm2=15").unwrap_err();
        assert!(e.to_string().contains("delta_nu_hat_ghz_cm"));
    }
}
