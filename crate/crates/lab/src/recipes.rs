//! One function per recipe. Each reads eigensystems through the session,
//! adds its tables and charts to the bundle and returns a JSON summary for
//! the manifest.

use anyhow::{anyhow, Context, Result};
use born_markov::correlation::{self, CorrelationSeries, CorrelationTimeOptions, EnvelopeOptions};
use born_markov::levelstats::{self, Reference, SpacingDistribution, SweepOptions};
use born_markov::lindblad::{self, LindbladModel, ScalingOptions};
use born_markov::markov_test::{BathInvariance, FactorizationReport};
use born_markov::operators::{self, BathObservable};
use born_markov::reduced::{self, ReducedSystemMatrix};
use born_markov::{
    evolution, spectra, BasisTag, EigenSystem, EnsembleState, FockBasis, ModelParams, SparseOperator, StateVector,
    TimeGrid,
};
use serde_json::{json, Value};

use crate::config::*;
use crate::output::Bundle;
use crate::plot::{LineChart, Series};
use crate::session::{stage, Session};
use crate::table::Table;

pub fn execute(cfg: &ExperimentConfig, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    match &cfg.options {
        RecipeOptions::Fig1a(o) => fig1a(cfg, o, s, out),
        RecipeOptions::Fig1b(o) => fig1b(cfg, o, s, out),
        RecipeOptions::Fig2(o) => fig2(cfg, o, s, out),
        RecipeOptions::Fig3(o) => fig3(cfg, o, s, out),
        RecipeOptions::Fig4(o) => fig4(cfg, o, s, out),
        RecipeOptions::Fig5(o) => fig5(cfg, o, s, out),
        RecipeOptions::Fig6(o) => fig6(cfg, o, s, out),
        RecipeOptions::Fig7(o) => fig7(cfg, o, s, out),
        RecipeOptions::EpsScan(o) => eps_scan(cfg, o, s, out),
        RecipeOptions::Custom(o) => custom(cfg, o, s, out),
    }
}

/// `0`, `0.2`, `0.025`: the shortest decimal, used in file names.
fn eps_label(eps: f64) -> String {
    format!("{eps}")
}

fn bath_observable(kind: BathObservable, p: &ModelParams) -> Result<SparseOperator> {
    let basis = FockBasis::new(p.particles, p.sites)?;
    operators::build_bath_observable(kind, &basis).with_context(|| stage("build bath observable", p))
}

/// `ψ_spin ⊗ Ψ_j` with `Ψ_j` the bath eigenstate closest to `energy`.
fn pure_start(bath: &EigenSystem, energy: f64, spin_up: f64) -> Result<(usize, StateVector)> {
    let j = spectra::select_index(bath.energies(), energy).ok_or_else(|| anyhow!("empty bath spectrum"))?;
    let psi =
        evolution::product_state(&StateVector::spin(spin_up)?, &StateVector::from_real(bath.vector(j), BasisTag::Bath)?)?;
    Ok((j, psi))
}

fn ensemble_start(bath: &EigenSystem, window: [f64; 2], spin_up: f64) -> Result<EnsembleState> {
    let ens = lindblad::product_ensemble(bath, &StateVector::spin(spin_up)?, (window[0], window[1]))
        .with_context(|| format!("initial ensemble from bath eigenstates in [{}, {}]", window[0], window[1]))?;
    Ok(ens)
}

fn start(
    bath: &EigenSystem,
    kind: BathState,
    energy: f64,
    window: [f64; 2],
    spin_up: f64,
) -> Result<(EnsembleState, Value)> {
    match kind {
        BathState::Eigenstate => {
            let (j, psi) = pure_start(bath, energy, spin_up)?;
            Ok((EnsembleState::pure(psi), json!({ "bath_state": "eigenstate", "bath_index": j, "bath_energy": bath.energy(j) })))
        }
        BathState::Ensemble => {
            let ens = ensemble_start(bath, window, spin_up)?;
            let n = ens.len();
            Ok((ens, json!({ "bath_state": "ensemble", "window": window, "members": n })))
        }
    }
}

/// Calls `f` with the evolved state at each time. Only one time slice is
/// held at once.
fn for_each_state(
    es: &EigenSystem,
    init: &EnsembleState,
    times: &[f64],
    mut f: impl FnMut(usize, f64, &EnsembleState) -> Result<()>,
) -> Result<()> {
    let prop = evolution::ensemble_propagator(es, init)?;
    for (k, &t) in times.iter().enumerate() {
        let state = init.with_states(prop.states_at(t))?;
        f(k, t, &state)?;
    }
    Ok(())
}

const RHO_COLUMNS: [&str; 5] = ["t", "rho_uu", "rho_dd", "re_rho_ud", "im_rho_ud"];

fn rho_table(times: &[f64], rhos: &[ReducedSystemMatrix]) -> Table {
    let mut t = Table::new(&RHO_COLUMNS);
    for (&time, r) in times.iter().zip(rhos) {
        let [uu, dd] = r.populations();
        let c = r.coherence();
        t.push(vec![time, uu, dd, c.re, c.im]);
    }
    t
}

fn rho_chart(title: &str, times: &[f64], rhos: &[ReducedSystemMatrix]) -> LineChart {
    let col = |f: &dyn Fn(&ReducedSystemMatrix) -> f64| rhos.iter().map(f).collect::<Vec<_>>();
    LineChart::new(title, "t", "|rho_S| elements")
        .with(Series::new("|rho_uu|", times, &col(&|r| r.entries[0][0].norm())))
        .with(Series::new("|rho_dd|", times, &col(&|r| r.entries[1][1].norm())))
        .with(Series::new("|rho_ud|", times, &col(&|r| r.coherence().norm())))
}

fn g_chart(g: &Table) -> LineChart {
    LineChart::new("system-bath correlation G(t)", "t", "G")
        .with(Series::new("G", &g.column("t").unwrap(), &g.column("G").unwrap()))
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Mean of `y` over the second half of the `x` range.
fn late_mean(x: &[f64], y: &[f64]) -> f64 {
    let (Some(&a), Some(&b)) = (x.first(), x.last()) else { return f64::NAN };
    let mid = 0.5 * (a + b);
    mean(&x.iter().zip(y).filter(|(t, _)| **t >= mid).map(|(_, v)| *v).collect::<Vec<_>>())
}

fn fig1a(cfg: &ExperimentConfig, o: &Fig1aOptions, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let (j, psi) = pure_start(&bath, o.energy, o.spin_up)?;
    let comp = s.composite(&p)?;
    let init = EnsembleState::pure(psi);
    let times: Vec<f64> = cfg.grid.times().collect();
    let mut rhos = Vec::with_capacity(times.len());
    let mut g = Table::new(&["t", "G"]);
    for_each_state(&comp, &init, &times, |k, t, st| {
        rhos.push(reduced::trace_out_bath(st).with_context(|| stage("rho_S(t)", &p))?);
        if k % o.g_every == 0 {
            g.push(vec![t, reduced::entanglement_g_with_cap(st, cfg.limits.g_cap).with_context(|| stage("G(t)", &p))?]);
        }
        Ok(())
    })?;
    out.csv("g_of_t.csv", &g);
    out.csv("rho_s_elements.csv", &rho_table(&times, &rhos));
    out.svg("g_of_t.svg", &g_chart(&g));
    out.svg("rho_s_elements.svg", &rho_chart("reduced density matrix", &times, &rhos));

    let gt = g.column("t").unwrap();
    let gv = g.column("G").unwrap();
    Ok(json!({
        "bath_index": j,
        "bath_energy": bath.energy(j),
        "g_initial": gv[0],
        "g_final": gv[gv.len() - 1],
        "g_late_mean": late_mean(&gt, &gv),
        "coherence_initial": rhos[0].coherence().norm(),
        "coherence_final": rhos[rhos.len() - 1].coherence().norm(),
    }))
}

fn fig1b(cfg: &ExperimentConfig, o: &Fig1bOptions, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let ens = ensemble_start(&bath, o.window, o.spin_up)?;
    let comp = s.composite(&p)?;
    let times: Vec<f64> = cfg.grid.times().collect();
    let traj = reduced::system_trajectory(&comp, &ens, &times).with_context(|| stage("rho_S(t)", &p))?;
    let coherence: Vec<f64> = traj.iter().map(|r| r.coherence().norm()).collect();

    let g_times: Vec<f64> = times.iter().step_by(o.g_every).copied().collect();
    let mut g = Table::new(&["t", "G"]);
    for_each_state(&comp, &ens, &g_times, |_, t, st| {
        g.push(vec![t, reduced::entanglement_g_with_cap(st, cfg.limits.g_cap).with_context(|| stage("G(t)", &p))?]);
        Ok(())
    })?;

    out.csv("rho_s_elements.csv", &rho_table(&times, &traj));
    out.csv("g_of_t.csv", &g);
    out.svg("rho_s_elements.svg", &rho_chart("reduced density matrix, ensemble", &times, &traj));
    out.svg("g_of_t.svg", &g_chart(&g));

    let mut chart = LineChart::new("coherence decay", "t", "|rho_ud|").log_y().with(Series::new("exact", &times, &coherence));
    let mut summary = json!({ "members": ens.len(), "window": o.window });
    match lindblad::fit_decay(&times, &coherence, (o.fit_window[0], o.fit_window[1])) {
        Ok(fit) => {
            let cmp = lindblad::compare_with_exact(&traj, &cfg.grid, p.delta, fit.rate)
                .with_context(|| stage("Lindblad comparison", &p))?;
            out.csv("lindblad.csv", &rho_table(&times, &cmp.lindblad));
            let fitted: Vec<f64> = times.iter().map(|&t| fit.eval(t)).collect();
            let lind: Vec<f64> = cmp.lindblad.iter().map(|r| r.coherence().norm()).collect();
            chart = chart.with(Series::new("fit", &times, &fitted).dashed()).with(Series::new("Lindblad", &times, &lind).dashed());
            summary["fit"] = json!({
                "rate": fit.rate,
                "rate_over_eps2": if p.epsilon != 0.0 { fit.rate / (p.epsilon * p.epsilon) } else { f64::NAN },
                "amplitude": fit.amplitude,
                "log_rms": fit.goodness,
                "window": [fit.window.0, fit.window.1],
                "points": fit.points,
            });
            summary["lindblad_sup_relative"] = json!(cmp.sup_relative);
            summary["populations_final"] = json!(traj[traj.len() - 1].populations());
        }
        Err(e) => summary["fit_error"] = json!(e.to_string()),
    }
    out.svg("coherence.svg", &chart);
    Ok(summary)
}

fn factorization_tables(rep: &FactorizationReport) -> (Table, Table, BathInvariance) {
    let mut f = Table::new(&[
        "t",
        "lhs_uu",
        "lhs_dd",
        "re_lhs_ud",
        "im_lhs_ud",
        "rhs_uu",
        "rhs_dd",
        "re_rhs_ud",
        "im_rhs_ud",
        "residual_sum",
    ]);
    for (((t, l), r), res) in rep.times.iter().zip(&rep.lhs).zip(&rep.rhs).zip(&rep.residual) {
        let (le, re) = (&l.entries, &r.entries);
        f.push(vec![*t, le[0][0].re, le[1][1].re, le[0][1].re, le[0][1].im, re[0][0].re, re[1][1].re, re[0][1].re, re[0][1].im, *res]);
    }
    let inv = BathInvariance::from_expectations(&rep.times, &rep.bath_expectation);
    let mut b = Table::new(&["t", "re_expectation", "im_expectation", "deviation"]);
    for ((t, e), d) in rep.times.iter().zip(&rep.bath_expectation).zip(&inv.deviation) {
        b.push(vec![*t, e.re, e.im, *d]);
    }
    (f, b, inv)
}

fn factorization_chart(f: &Table) -> LineChart {
    let t = f.column("t").unwrap();
    let mut chart = LineChart::new("Tr_B[L R] (solid) vs Tr[L rho_B] rho_S (dashed)", "t", "value");
    for q in ["uu", "dd", "re_{}_ud", "im_{}_ud"] {
        let (lc, rc) = if q.contains("{}") {
            (q.replace("{}", "lhs"), q.replace("{}", "rhs"))
        } else {
            (format!("lhs_{q}"), format!("rhs_{q}"))
        };
        chart = chart.with(Series::new(&lc, &t, &f.column(&lc).unwrap()));
        chart = chart.with(Series::new(&rc, &t, &f.column(&rc).unwrap()).dashed());
    }
    chart
}

fn factorization_summary(rep: &FactorizationReport, inv: &BathInvariance) -> Value {
    json!({
        "relative_residual": rep.relative_residual(),
        "residual_t0": rep.residual.first(),
        "max_residual": rep.residual.iter().copied().fold(0.0, f64::max),
        "trace_defect": rep.trace_defect(),
        "max_hermiticity_defect": rep.max_hermiticity_defect(),
        "bath_invariance_max": inv.max_deviation(),
        "bath_invariance_absolute": inv.absolute,
    })
}

fn fig2(cfg: &ExperimentConfig, o: &Fig2Options, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let (init, start_info) = start(&bath, o.bath_state, o.energy, o.window, o.spin_up)?;
    let comp = s.composite(&p)?;
    let lambda = bath_observable(BathObservable::HopProduct, &p)?;
    let times: Vec<f64> = cfg.grid.times().collect();
    let mut rep = FactorizationReport::empty();
    for_each_state(&comp, &init, &times, |_, t, st| {
        rep.push(t, st, &lambda).with_context(|| stage("factorization test", &p))
    })?;
    let (f, b, inv) = factorization_tables(&rep);
    out.csv("factorization.csv", &f);
    out.csv("bath_invariance.csv", &b);
    out.svg("factorization.svg", &factorization_chart(&f));
    out.svg(
        "bath_invariance.svg",
        &LineChart::new("bath invariance", "t", "relative deviation")
            .with(Series::new("d(t)", &b.column("t").unwrap(), &b.column("deviation").unwrap())),
    );
    let mut summary = factorization_summary(&rep, &inv);
    summary["initial_state"] = start_info;
    summary["observable"] = json!(BathObservable::HopProduct.name());
    Ok(summary)
}

fn spacing_table(sd: &SpacingDistribution, eps: f64) -> Table {
    let mut t = Table::new(&["s", "I_emp", "I_GOE", "I_Poisson", "I_2GOE"]).with_meta("epsilon", eps);
    for i in 0..sd.s_grid.len() {
        t.push(vec![sd.s_grid[i], sd.empirical[i], sd.goe[i], sd.poisson[i], sd.two_goe[i]]);
    }
    t
}

fn spacing_chart(sd: &SpacingDistribution, eps: f64) -> LineChart {
    LineChart::new(&format!("integrated spacing distribution, eps = {eps}"), "s", "I(s)")
        .with(Series::new("empirical", &sd.s_grid, &sd.empirical))
        .with(Series::new("GOE", &sd.s_grid, &sd.goe).dashed())
        .with(Series::new("Poisson", &sd.s_grid, &sd.poisson).dashed())
        .with(Series::new("2xGOE", &sd.s_grid, &sd.two_goe).dashed())
}

fn fig3(cfg: &ExperimentConfig, o: &Fig3Options, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let sweep = SweepOptions {
        fit_degree: o.fit_degree,
        edge_fraction: o.edge_fraction,
        dimension_cap: s.dimension_cap(),
        ..SweepOptions::default()
    };
    let mut spectra_by_eps = Vec::new();
    let mut dist = Table::new(&["epsilon", "goe_distance", "two_goe_distance", "poisson_distance"]);
    let mut per_eps = Vec::new();
    for &eps in &o.epsilons {
        let pe = p.with_epsilon(eps);
        let energies = s.composite_energies(&pe)?;
        let sd = levelstats::spacing_of_energies(&energies, &sweep).with_context(|| stage("unfold spectrum", &pe))?;
        let label = eps_label(eps);
        out.csv(&format!("spacing_eps{label}.csv"), &spacing_table(&sd, eps));
        out.svg(&format!("spacing_eps{label}.svg"), &spacing_chart(&sd, eps));
        let d = [Reference::Goe, Reference::TwoGoe, Reference::Poisson].map(|r| levelstats::goe_distance(&sd, r));
        dist.push(vec![eps, d[0], d[1], d[2]]);
        let nearest = [Reference::Goe, Reference::TwoGoe, Reference::Poisson]
            .into_iter()
            .zip(d)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(r, _)| r.name())
            .unwrap();
        per_eps.push(json!({
            "epsilon": eps, "levels": energies.len(),
            "goe_distance": d[0], "two_goe_distance": d[1], "poisson_distance": d[2], "nearest": nearest,
        }));
        spectra_by_eps.push((eps, energies));
    }
    out.csv("distances.csv", &dist);

    let lo = spectra_by_eps.iter().flat_map(|(_, e)| e.first()).copied().fold(f64::INFINITY, f64::min);
    let hi = spectra_by_eps.iter().flat_map(|(_, e)| e.last()).copied().fold(f64::NEG_INFINITY, f64::max);
    let hists = spectra_by_eps
        .iter()
        .map(|(_, e)| spectra::density_of_states_in(e, o.dos_bins, lo, hi))
        .collect::<born_markov::Result<Vec<_>>>()?;
    let names: Vec<String> =
        std::iter::once("energy".to_string()).chain(spectra_by_eps.iter().map(|(e, _)| format!("dos_eps{}", eps_label(*e)))).collect();
    let mut dos = Table::new(&names.iter().map(String::as_str).collect::<Vec<_>>()).with_meta("bin_width", hists[0].bin_width());
    let centers: Vec<f64> = hists[0].centers().collect();
    for (i, &c) in centers.iter().enumerate() {
        dos.push(std::iter::once(c).chain(hists.iter().map(|h| h.weights[i])).collect());
    }
    out.csv("dos.csv", &dos);
    let mut chart = LineChart::new("density of states (fraction of levels per bin)", "E", "fraction");
    for (k, h) in hists.iter().enumerate() {
        let series = Series::new(&names[k + 1], &centers, &h.weights);
        chart = chart.with(if k > 0 { series.dashed() } else { series });
    }
    out.svg("dos.svg", &chart);
    Ok(json!({ "spectra": per_eps, "fit_degree": o.fit_degree, "edge_fraction": o.edge_fraction }))
}

fn correlation_table(series: &CorrelationSeries, meta: &[(&str, String)]) -> Table {
    let mut t = Table::new(&["tau", "re_alpha", "im_alpha"]);
    for (k, v) in meta {
        t = t.with_meta(k, v);
    }
    for (tau, a) in series.taus.iter().zip(&series.values) {
        t.push(vec![*tau, a.re, a.im]);
    }
    t
}

fn correlation_chart(title: &str, series: &CorrelationSeries) -> LineChart {
    let re: Vec<f64> = series.values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = series.values.iter().map(|v| v.im).collect();
    LineChart::new(title, "tau", "alpha")
        .with(Series::new("Re alpha", &series.taus, &re))
        .with(Series::new("Im alpha", &series.taus, &im).dashed())
}

fn tau_star_json(series: &CorrelationSeries) -> Value {
    match correlation::correlation_time_fit(series, CorrelationTimeOptions::default()) {
        Ok(c) => json!({ "tau_star": c.tau_star, "width": c.width, "log_amplitude": c.log_amplitude, "points": c.points_used }),
        Err(born_markov::Error::RegularBath) => json!({ "tau_star": null, "regular_bath": true }),
        Err(e) => json!({ "tau_star": null, "error": e.to_string() }),
    }
}

fn fig4(cfg: &ExperimentConfig, o: &Fig4Options, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let ens = ensemble_start(&bath, o.window, o.spin_up)?;
    let comp = s.composite(&p)?;
    let a = bath_observable(BathObservable::Hop21To1, &p)?;
    let taus = TimeGrid::span(0.0, o.tau_max, o.tau_dt)?;

    let evolved = evolution::evolve_ensemble_to(&comp, &ens, o.t_anchor)?;
    let rho_t = reduced::trace_out_system(&evolved)?;
    let alpha_t = correlation::correlation_time_domain(&bath, &a, &rho_t, &taus, o.t_anchor)
        .with_context(|| stage("correlation at t_anchor", &p))?;
    let rho_0 = reduced::trace_out_system(&ens)?;
    let alpha_0 =
        correlation::correlation_time_domain(&bath, &a, &rho_0, &taus, 0.0).with_context(|| stage("correlation at t=0", &p))?;
    let a0 = alpha_0.values[0].norm();
    let stationarity = alpha_t.max_abs_diff(&alpha_0) / a0;

    let u_meta = |u: f64, t: f64| vec![("t_anchor", t.to_string()), ("u", u.to_string())];
    out.csv("correlation.csv", &correlation_table(&alpha_t, &u_meta(p.u, o.t_anchor)));
    out.csv("correlation_t0.csv", &correlation_table(&alpha_0, &u_meta(p.u, 0.0)));
    out.svg("correlation.svg", &correlation_chart(&format!("bath correlation, t = {}", o.t_anchor), &alpha_t));

    let mut summary = json!({
        "members": ens.len(),
        "alpha0": [alpha_t.values[0].re, alpha_t.values[0].im],
        "anchor": tau_star_json(&alpha_t),
        "t0": tau_star_json(&alpha_0),
        "stationarity_deviation": stationarity,
    });

    // Regular comparison bath, same protocol, sampled at t = 0.
    let pr = p.with_u(o.regular_u);
    let bath_r = s.bath(&pr)?;
    match ensemble_start(&bath_r, o.window, o.spin_up) {
        Ok(ens_r) => {
            let rho_r = reduced::trace_out_system(&ens_r)?;
            let alpha_r = correlation::correlation_time_domain(&bath_r, &a, &rho_r, &taus, 0.0)
                .with_context(|| stage("regular-bath correlation", &pr))?;
            out.csv("correlation_regular.csv", &correlation_table(&alpha_r, &u_meta(pr.u, 0.0)));
            out.svg("correlation_regular.svg", &correlation_chart(&format!("regular bath, U = {}", pr.u), &alpha_r));
            let mut r = tau_star_json(&alpha_r);
            r["members"] = json!(ens_r.len());
            r["u"] = json!(pr.u);
            summary["regular"] = r;
        }
        Err(e) => summary["regular"] = json!({ "u": pr.u, "error": format!("{e:#}") }),
    }
    Ok(summary)
}

fn fig5(cfg: &ExperimentConfig, o: &Fig5Options, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let (j, psi) = pure_start(&bath, o.energy, o.spin_up)?;
    let comp = s.composite(&p)?;
    let times: Vec<f64> = cfg.grid.times().collect();
    let mut table = Table::new(&["t", "entropy", "w1", "w2", "entropy_bath"]);
    let (mut schmidt, mut entropy_gap) = (0.0f64, 0.0f64);
    for_each_state(&comp, &EnsembleState::pure(psi), &times, |_, t, st| {
        let (row, d_w, d_s) = entropy_row(t, st).with_context(|| stage("entropy", &p))?;
        schmidt = schmidt.max(d_w);
        entropy_gap = entropy_gap.max(d_s);
        table.push(row);
        Ok(())
    })?;
    out.csv("entropy.csv", &table);
    let t = table.column("t").unwrap();
    out.svg("entropy.svg", &LineChart::new("entropy of rho_S", "t", "S").with(Series::new("S", &t, &table.column("entropy").unwrap())));
    out.svg(
        "eigenvalues.svg",
        &LineChart::new("eigenvalues of rho_S", "t", "w")
            .with(Series::new("w1", &t, &table.column("w1").unwrap()))
            .with(Series::new("w2", &t, &table.column("w2").unwrap())),
    );
    Ok(json!({
        "bath_index": j,
        "bath_energy": bath.energy(j),
        "entropy_t0": table.rows[0][1],
        "entropy_final": table.rows[table.len() - 1][1],
        "max_schmidt_defect": schmidt,
        "max_entropy_defect": entropy_gap,
    }))
}

/// `(t, S, w1, w2, S_B)` plus the Schmidt-spectrum and entropy gaps. The
/// gaps are only meaningful for pure composite states.
fn entropy_row(t: f64, st: &EnsembleState) -> born_markov::Result<(Vec<f64>, f64, f64)> {
    let w = reduced::trace_out_bath(st)?.spectral_decomposition().weights;
    let s_sys = reduced::entropy_of(&w)?;
    let sd_b = reduced::trace_out_system(st)?.spectral_decomposition()?;
    let s_bath = reduced::entropy(&sd_b)?;
    let n = w.len().max(sd_b.weights.len());
    let d_w = (0..n)
        .map(|i| (w.get(i).copied().unwrap_or(0.0).max(0.0) - sd_b.weights.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    Ok((vec![t, s_sys, w[0], w[1], s_bath], d_w, (s_sys - s_bath).abs()))
}

fn fig6(cfg: &ExperimentConfig, o: &Fig6Options, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let (j, psi) = pure_start(&bath, o.energy, o.spin_up)?;
    let comp = s.composite(&p)?;
    let t = o.t_sample.unwrap_or(cfg.grid.end());
    let st = evolution::evolve_to(&comp, &psi, t)?;
    let rho_b = reduced::trace_out_system(&st)?;
    let exp = reduced::bath_eigenstate_expansion(&rho_b, &bath).with_context(|| stage("bath eigen-expansion", &p))?;

    let e0 = bath.energy(j);
    let hw = o.half_width * p.delta;
    let windows: Vec<(f64, f64)> = [0.0, -2.0 * p.delta, 2.0 * p.delta].iter().map(|c| (e0 + c - hw, e0 + c + hw)).collect();
    let mut table = Table::new(&["j", "energy", "c1_abs2", "c2_abs2"]).with_meta("t", t).with_meta("bath_energy", e0);
    let weight = |n: usize, k: usize| exp.coefficients.get(n).map_or(0.0, |c| c[k].norm_sqr());
    for k in 0..bath.dim() {
        table.push(vec![k as f64, bath.energy(k), weight(0, k), weight(1, k)]);
    }
    out.csv("expansion.csv", &table);
    let e = table.column("energy").unwrap();
    out.svg(
        "expansion.svg",
        &LineChart::new(&format!("Schmidt states of rho_B in the bath energy basis, t = {t}"), "E_j", "|c_j|^2")
            .with(Series::new("n=1", &e, &table.column("c1_abs2").unwrap()))
            .with(Series::new("n=2", &e, &table.column("c2_abs2").unwrap()).dashed()),
    );
    let masses: Vec<f64> = (0..exp.weights.len().min(2)).map(|n| exp.mass_in_windows(n, bath.energies(), &windows)).collect();
    Ok(json!({
        "t": t,
        "bath_index": j,
        "bath_energy": e0,
        "schmidt_weights": exp.weights,
        "windows": windows,
        "mass_in_windows": masses,
    }))
}

fn fig7(cfg: &ExperimentConfig, o: &Fig7Options, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let a = bath_observable(BathObservable::Hop21To1, &p)?;
    let energies = bath.energies();
    let center = o.energy.unwrap_or_else(|| mean(energies));
    let mut order: Vec<usize> = (0..bath.dim()).collect();
    order.sort_by(|&x, &y| (energies[x] - center).abs().total_cmp(&(energies[y] - center).abs()).then(x.cmp(&y)));
    if o.states > order.len() {
        anyhow::bail!("fig7.states = {} exceeds the bath dimension {}", o.states, order.len());
    }
    let j0 = order[0];
    let mut j_set: Vec<usize> = order[..o.states].to_vec();
    j_set.sort_unstable();

    let taus = TimeGrid::span(0.0, o.tau_max, o.tau_dt)?;
    let alpha = correlation::correlation_spectral(&bath, &a, j0, &taus).with_context(|| stage("spectral correlation", &p))?;
    out.csv(
        "correlation_spectral.csv",
        &correlation_table(&alpha, &[("j", j0.to_string()), ("bath_energy", energies[j0].to_string())]),
    );
    out.svg("correlation_spectral.svg", &correlation_chart(&format!("bath correlation from eigenstate {j0}"), &alpha));

    let bw = o.bin_width.unwrap_or_else(|| correlation::default_bin_width(&bath));
    let pairs = correlation::transition_pairs(&bath, &a, &j_set).with_context(|| stage("transition strengths", &p))?;
    let (centers, v, counts) = correlation::bin_pairs(&pairs, bw)?;
    let mut table = Table::new(&["dE", "V", "count"])
        .with_meta("bin_width", bw)
        .with_meta("states", o.states)
        .with_meta("center_energy", center);
    for i in 0..centers.len() {
        table.push(vec![centers[i], v[i], counts[i] as f64]);
    }
    out.csv("v_of_de.csv", &table);

    let mut chart = LineChart::new("binned transition strengths", "dE", "V").log_y().with(Series::new("V", &centers, &v));
    let mut summary = json!({
        "j": j0, "bath_energy": energies[j0], "center_energy": center, "states": o.states, "bin_width": bw,
        "correlation": tau_star_json(&alpha),
    });
    match correlation::fit_gaussian_envelope(&centers, &v, EnvelopeOptions { block: o.block, floor: o.floor }) {
        Ok(fit) => {
            let curve: Vec<f64> = centers.iter().map(|&x| fit.eval(x)).collect();
            chart = chart.with(Series::new("Gaussian envelope", &centers, &curve).dashed());
            summary["fit"] = json!({
                "amplitude": fit.amplitude, "center": fit.center, "sigma": fit.sigma, "log_rms": fit.log_rms,
                "tau_star": 2f64.sqrt() / fit.sigma,
            });
        }
        Err(e) => summary["fit_error"] = json!(e.to_string()),
    }
    out.svg("v_of_de.svg", &chart);
    Ok(summary)
}

fn eps_scan(cfg: &ExperimentConfig, o: &EpsScanOptions, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let sweep = SweepOptions {
        fit_degree: o.fit_degree,
        edge_fraction: o.edge_fraction,
        threshold: o.threshold,
        dimension_cap: s.dimension_cap(),
    };
    let mut curve = Vec::new();
    for &eps in &o.epsilons {
        let pe = p.with_epsilon(eps);
        let energies = s.composite_energies(&pe)?;
        let sd = levelstats::spacing_of_energies(&energies, &sweep).with_context(|| stage("unfold spectrum", &pe))?;
        curve.push((eps, levelstats::goe_distance(&sd, Reference::Goe)));
    }
    let sweep_result = levelstats::EpsilonSweep { curve, threshold: o.threshold };
    let mut dist = Table::new(&["epsilon", "goe_distance"]).with_meta("threshold", o.threshold);
    for &(e, d) in &sweep_result.curve {
        dist.push(vec![e, d]);
    }
    out.csv("goe_distance.csv", &dist);
    let eps: Vec<f64> = sweep_result.curve.iter().map(|c| c.0).collect();
    out.svg(
        "goe_distance.svg",
        &LineChart::new("distance to GOE", "epsilon", "sup |I_emp - I_GOE|")
            .with(Series::new("distance", &eps, &dist.column("goe_distance").unwrap()))
            .with(Series::new("threshold", &eps, &vec![o.threshold; eps.len()]).dashed()),
    );
    let mut summary = json!({ "curve": sweep_result.curve, "threshold": o.threshold, "eps_cr": sweep_result.critical() });

    if o.scaling_epsilons.is_empty() {
        return Ok(summary);
    }
    let opts = ScalingOptions {
        reference_epsilon: o.reference_epsilon,
        window: (o.fit_window[0], o.fit_window[1]),
        dt: o.dt,
        spin_up: o.spin_up,
        bath_window: (o.window[0], o.window[1]),
        spread_limit: o.spread_limit,
        goodness_limit: o.goodness_limit,
        dimension_cap: s.dimension_cap(),
    };
    let bath = s.bath(&p)?;
    let ens = ensemble_start(&bath, o.window, o.spin_up)?;
    let mut rows = Vec::new();
    let mut chart = LineChart::new("coherence decay per coupling", "t", "|rho_ud|").log_y();
    for &eps in &o.scaling_epsilons {
        let pe = p.with_epsilon(eps);
        let comp = s.composite(&pe)?;
        let row = lindblad::scaling_row(&comp, &ens, eps, &opts).with_context(|| stage("scaling run", &pe))?;
        let label = eps_label(eps);
        out.csv(&format!("coherence_eps{label}.csv"), &rho_table(&row.times, &row.exact));
        chart = chart.with(Series::new(&format!("eps={label}"), &row.times, &row.coherence()));
        if let Some(fit) = &row.fit {
            let grid = lindblad::scaling_grid(eps, &opts)?.0;
            let model = LindbladModel::high_temperature(p.delta, fit.rate)?;
            let run = lindblad::integrate_lindblad(&model, &row.exact[0], &grid).with_context(|| stage("Lindblad run", &pe))?;
            out.csv(&format!("lindblad_eps{label}.csv"), &rho_table(&row.times, &run));
        }
        rows.push(row);
    }
    let table = lindblad::scaling_table(rows, o.spread_limit);
    let mut rates = Table::new(&["epsilon", "rate", "rate_over_eps2"]);
    for r in &table.rows {
        rates.push(vec![r.epsilon, r.rate, r.rate_over_eps2.unwrap_or(f64::NAN)]);
    }
    out.csv("rate_scaling.csv", &rates);
    out.svg("coherence.svg", &chart);
    let ratio = match (table.rate(0.2), table.rate(0.1)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    summary["scaling"] = json!({
        "relative_spread": table.relative_spread,
        "within_limit": table.within_limit(o.spread_limit),
        "rate_ratio_0.2_over_0.1": ratio,
        "rows": table.rows.iter().map(|r| json!({
            "epsilon": r.epsilon,
            "rate": r.rate,
            "rate_over_eps2": r.rate_over_eps2,
            "log_rms": r.fit.as_ref().map(|f| f.goodness),
            "flags": r.flags.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    Ok(summary)
}

fn custom(cfg: &ExperimentConfig, o: &CustomOptions, s: &mut Session, out: &mut Bundle) -> Result<Value> {
    let p = cfg.model;
    let bath = s.bath(&p)?;
    let (init, start_info) = start(&bath, o.bath_state, o.energy, o.window, o.spin_up)?;
    let comp = s.composite(&p)?;
    let want = |x: Observable| o.observables.contains(&x);
    let times: Vec<f64> = cfg.grid.times().collect();
    let lambda = if want(Observable::Factorization) { Some(bath_observable(BathObservable::HopProduct, &p)?) } else { None };

    let mut rhos = Vec::new();
    let mut g = Table::new(&["t", "G"]);
    let mut ent = Table::new(&["t", "entropy", "w1", "w2", "entropy_bath"]);
    let mut rep = FactorizationReport::empty();
    for_each_state(&comp, &init, &times, |k, t, st| {
        if want(Observable::RhoS) {
            rhos.push(reduced::trace_out_bath(st).with_context(|| stage("rho_S(t)", &p))?);
        }
        if want(Observable::G) && k % o.g_every == 0 {
            g.push(vec![t, reduced::entanglement_g_with_cap(st, cfg.limits.g_cap).with_context(|| stage("G(t)", &p))?]);
        }
        if want(Observable::Entropy) {
            ent.push(entropy_row(t, st).with_context(|| stage("entropy", &p))?.0);
        }
        if let Some(l) = &lambda {
            rep.push(t, st, l).with_context(|| stage("factorization test", &p))?;
        }
        Ok(())
    })?;

    let mut summary = json!({ "initial_state": start_info, "observables": o.observables });
    if want(Observable::RhoS) {
        out.csv("rho_s_elements.csv", &rho_table(&times, &rhos));
        out.svg("rho_s_elements.svg", &rho_chart("reduced density matrix", &times, &rhos));
    }
    if want(Observable::G) {
        out.csv("g_of_t.csv", &g);
        out.svg("g_of_t.svg", &g_chart(&g));
        summary["g_late_mean"] = json!(late_mean(&g.column("t").unwrap(), &g.column("G").unwrap()));
    }
    if want(Observable::Entropy) {
        out.csv("entropy.csv", &ent);
        out.svg(
            "entropy.svg",
            &LineChart::new("entropy", "t", "S")
                .with(Series::new("S(rho_S)", &times, &ent.column("entropy").unwrap()))
                .with(Series::new("S(rho_B)", &times, &ent.column("entropy_bath").unwrap()).dashed()),
        );
    }
    if lambda.is_some() {
        let (f, b, inv) = factorization_tables(&rep);
        out.csv("factorization.csv", &f);
        out.csv("bath_invariance.csv", &b);
        out.svg("factorization.svg", &factorization_chart(&f));
        summary["factorization"] = factorization_summary(&rep, &inv);
    }
    Ok(summary)
}
