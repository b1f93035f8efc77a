//! Command dispatch: one validated config in, one deterministic report
//! document out, plus optional plot data and a verdict for the exit
//! code. Nothing here prints or exits; the binary owns I/O and timing.

use std::sync::Arc;

use crate::config::{
    build_center, build_envelope, build_majorant, build_map, build_weight, ExpectSpec,
    GeometrySpec, HypothesisSpec, RunConfig, COMMANDS,
};
use crate::dilatation::{dilatations_at, ki_lq_norm};
use crate::error::{Error, Result};
use crate::geometry::{AnnulusSpec, Point};
use crate::integrals::{
    check_growth_condition, check_log_growth_condition, fmo_estimate_with, sphere_average,
    FmoParams,
};
use crate::modulus::{
    analytic_modulus, check_poletskii, discrete_modulus, CurveFamily, FamilyDescriptor, Grid,
    PolarGrid, PoletskiiParams, SolveParams, SphericalGrid,
};
use crate::report::{Doc, PlotTable};
use crate::singularity::{
    classify_with, check_growth, modulus_chain_bounds, radius_ladder, verify_folding_example,
    verify_ring_example, GrowthEnvelope, GrowthReport,
};

/// Everything a finished run hands back to the binary.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: String,
    pub plot: Option<String>,
    /// False when a declared or built-in expectation failed; maps to
    /// exit code 1.
    pub verdict_ok: bool,
}

/// Slack below which the image-modulus inequality counts as violated.
pub const POLETSKII_SLACK_TOLERANCE: f64 = -1e-2;
/// Default relative slack for bracket-containment expectations.
pub const BRACKET_REL_TOL: f64 = 0.05;

pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    if !COMMANDS.contains(&config.command.as_str()) {
        return Err(Error::Config(format!(
            "unknown command {:?}; expected one of {}",
            config.command,
            COMMANDS.join(", ")
        )));
    }
    let mut doc = Doc::new();
    doc.section("tool");
    doc.str("name", "curvemod");
    doc.str("version", env!("CARGO_PKG_VERSION"));
    doc.section("config");
    doc.str("command", &config.command);

    let (plot, verdict_ok) = match config.command.as_str() {
        "dilatation" => run_dilatation(config, &mut doc)?,
        "integrals" => run_integrals(config, &mut doc)?,
        "fmo" => run_fmo(config, &mut doc)?,
        "modulus" => run_modulus(config, &mut doc)?,
        "poletskii" => run_poletskii(config, &mut doc)?,
        "classify" => run_classify(config, &mut doc)?,
        "growth" => run_growth(config, &mut doc)?,
        "lemma1" => run_chain(config, &mut doc)?,
        "verify-theorem4" => run_ring_example(config, &mut doc)?,
        "verify-theorem5" => run_folding_example(config, &mut doc)?,
        other => return Err(Error::Config(format!("unknown command {other:?}"))),
    };

    Ok(RunOutcome {
        report: doc.finish(),
        plot: plot.filter(|t| !t.is_empty()).map(|t| t.to_tsv()),
        verdict_ok,
    })
}

fn geometry(config: &RunConfig) -> GeometrySpec {
    config.geometry.clone().unwrap_or_default()
}

fn hypothesis(config: &RunConfig) -> HypothesisSpec {
    config.hypothesis.clone().unwrap_or_default()
}

fn expect(config: &RunConfig) -> ExpectSpec {
    config.expect.clone().unwrap_or_default()
}

fn need<T: Copy>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing {what}")))
}

fn ambient_dim(config: &RunConfig) -> usize {
    let geo = geometry(config);
    geo.dim
        .or_else(|| geo.center.as_ref().map(|c| c.len()))
        .or_else(|| config.map.as_ref().and_then(|m| m.dim))
        .unwrap_or(2)
}

fn config_map(config: &RunConfig) -> Result<crate::gallery::MapHandle> {
    let spec = config.map.as_ref().ok_or_else(|| Error::Config("missing [map]".into()))?;
    build_map(spec)
}

fn run_dilatation(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let map = config_map(config)?;
    let geo = geometry(config);
    doc.str("map", map.name());
    doc.uint("dim", map.dim());

    let mut plot = None;
    let mut verdict_ok = true;
    let mut did_anything = false;

    if let Some(point) = &geo.point {
        let rec = dilatations_at(&map, point)?;
        doc.section("pointwise");
        doc.floats("point", point);
        doc.float("k_i", rec.k_i);
        doc.float("k_o", rec.k_o);
        doc.float("jacobian_det", rec.jacobian_det);
        doc.floats("singular_values", &rec.singular_values);
        doc.boolean("degenerate", rec.degenerate);
        let mut t = PlotTable::new(&["k_i", "k_o", "jacobian_det"]);
        t.row(&[rec.k_i, rec.k_o, rec.jacobian_det]);
        plot = Some(t);
        did_anything = true;
    }

    if let (Some(r_inner), Some(r_outer)) = (geo.r_inner, geo.r_outer) {
        let hyp = hypothesis(config);
        let q = need(hyp.q, "hypothesis.q for the weighted norm")?;
        let center = build_center(config.geometry.as_ref(), map.dim())?;
        let annulus = AnnulusSpec::new(center, r_inner, r_outer)?;
        let rep = ki_lq_norm(&map, &annulus, q)?;
        doc.section("lq_norm");
        doc.float("q", q);
        doc.float("r_inner", r_inner);
        doc.float("r_outer", r_outer);
        doc.float("value", rep.value);
        doc.float("tail_slope", rep.tail_slope);
        doc.boolean("diverging", rep.diverging);
        doc.uint("shells", rep.shells.len());
        let mut t = PlotTable::new(&["radius", "surface_integrand", "shell_contribution"]);
        for s in &rep.shells {
            t.row(&[s.radius, s.integrand, s.contribution]);
        }
        plot = Some(t);
        if let Some(e) = expect(config).diverging {
            verdict_ok = e == rep.diverging;
            doc.boolean("expected_diverging", e);
        }
        did_anything = true;
    }

    if !did_anything {
        return Err(Error::Config(
            "dilatation needs geometry.point, or an annulus (r_inner, r_outer) with \
             hypothesis.q"
                .into(),
        ));
    }
    Ok((plot, verdict_ok))
}

fn run_integrals(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let hyp = hypothesis(config);
    let dim = ambient_dim(config);
    let base = build_center(config.geometry.as_ref(), dim)?;
    let field = build_majorant(&hyp, base.clone())?;
    let amount = need(hyp.amount, "hypothesis.amount")?;
    let eps = need(hyp.eps, "hypothesis.eps")?;
    let eps0 = need(hyp.eps0, "hypothesis.eps0")?;
    let kind = hyp.condition.as_deref().unwrap_or("fixed");

    let rep = match kind {
        "fixed" => {
            let psi = build_weight(&hyp)?;
            doc.str("weight", psi.name());
            check_growth_condition(&field, &psi, &base, amount, eps, eps0)?
        }
        "log" => check_log_growth_condition(&field, &base, amount, eps, eps0)?,
        other => {
            return Err(Error::Config(format!(
                "unknown condition kind {other:?}; expected fixed or log"
            )))
        }
    };

    doc.str("majorant", field.name());
    doc.uint("dim", dim);
    doc.section("condition");
    doc.str("kind", kind);
    doc.float("amount", amount);
    doc.float("eps", eps);
    doc.float("eps0", eps0);
    doc.float("lhs", rep.lhs);
    doc.float("rhs", rep.rhs);
    doc.float("weight_normalizer", rep.normalizer);
    doc.boolean("satisfied", rep.satisfied);

    let mut t = PlotTable::new(&["radius", "sphere_average"]);
    if eps < eps0 {
        let steps = 32usize;
        for j in 0..=steps {
            let r = eps * (eps0 / eps).powf(j as f64 / steps as f64);
            t.row(&[r, sphere_average(&field, &base, r)?]);
        }
    }
    let verdict_ok = match expect(config).satisfied {
        Some(e) => {
            doc.boolean("expected_satisfied", e);
            e == rep.satisfied
        }
        None => rep.satisfied,
    };
    Ok((Some(t), verdict_ok))
}

fn run_fmo(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let hyp = hypothesis(config);
    let geo = geometry(config);
    let dim = ambient_dim(config);
    let base = build_center(config.geometry.as_ref(), dim)?;
    let field = build_majorant(&hyp, base.clone())?;
    let defaults = FmoParams::default();
    let params = FmoParams {
        r_max: geo.r_max.unwrap_or(defaults.r_max),
        levels: geo.levels.unwrap_or(defaults.levels),
    };
    let rep = fmo_estimate_with(&field, &base, params)?;

    doc.str("majorant", field.name());
    doc.uint("dim", dim);
    doc.section("oscillation");
    doc.float("r_max", params.r_max);
    doc.uint("levels", params.levels);
    doc.str("verdict", rep.verdict.as_str());
    doc.float("normalized_slope", rep.normalized_slope);
    doc.float("limsup_estimate", rep.limsup_estimate);

    let mut t = PlotTable::new(&["radius", "ball_mean", "ball_oscillation"]);
    for ((r, m), o) in rep.radii.iter().zip(&rep.means).zip(&rep.oscillations) {
        t.row(&[*r, *m, *o]);
    }
    let verdict_ok = match expect(config).verdict.as_deref() {
        Some(e) => {
            doc.str("expected_verdict", e);
            e == rep.verdict.as_str()
        }
        None => true,
    };
    Ok((Some(t), verdict_ok))
}

fn family_descriptor(config: &RunConfig, center: Point) -> Result<FamilyDescriptor> {
    let spec = config.modulus.clone().unwrap_or_default();
    let geo = geometry(config);
    let r_inner = need(geo.r_inner, "geometry.r_inner")?;
    let r_outer = need(geo.r_outer, "geometry.r_outer")?;
    match spec.descriptor.as_deref().unwrap_or("ring") {
        "ring" => FamilyDescriptor::ring(center, r_inner, r_outer),
        "cap" => {
            let axis = spec.axis.clone().unwrap_or_else(|| {
                let mut a = vec![0.0; center.dim()];
                a[center.dim() - 1] = 1.0;
                a
            });
            FamilyDescriptor::cap(center, r_inner, r_outer, axis)
        }
        other => Err(Error::Config(format!("unknown descriptor {other:?}"))),
    }
}

fn annulus_grid(
    center: &Point,
    r_inner: f64,
    r_outer: f64,
    cells: usize,
) -> Result<Arc<dyn Grid>> {
    match center.dim() {
        2 => Ok(Arc::new(PolarGrid::new(center.clone(), r_inner, r_outer, cells, cells)?)),
        3 => Ok(Arc::new(SphericalGrid::new(
            center.clone(),
            r_inner,
            r_outer,
            cells,
            (cells / 4).max(4),
            (cells / 2).max(8),
        )?)),
        n => Err(Error::Config(format!("annulus grids exist for dimensions 2 and 3, not {n}"))),
    }
}

fn solve_params(config: &RunConfig, defaults: SolveParams) -> SolveParams {
    let spec = config.modulus.clone().unwrap_or_default();
    SolveParams {
        max_iters: spec.max_iters.unwrap_or(defaults.max_iters),
        gap_tol: spec.gap_tol.unwrap_or(defaults.gap_tol),
        step: spec.step.unwrap_or(defaults.step),
    }
}

fn run_modulus(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let geo = geometry(config);
    let dim = ambient_dim(config);
    let center = build_center(config.geometry.as_ref(), dim)?;
    let descriptor = family_descriptor(config, center.clone())?;
    let r_inner = need(geo.r_inner, "geometry.r_inner")?;
    let r_outer = need(geo.r_outer, "geometry.r_outer")?;
    let curve_count = geo.curves.unwrap_or(128);
    let cells = geo.grid.unwrap_or(64);

    let family = match &descriptor {
        FamilyDescriptor::Ring { .. } => {
            CurveFamily::ring(center.clone(), r_inner, r_outer, curve_count)?
        }
        FamilyDescriptor::SphericalCap { axis, .. } => CurveFamily::spherical_cap(
            center.clone(),
            r_inner,
            r_outer,
            axis.clone(),
            curve_count,
        )?,
        FamilyDescriptor::Custom { .. } => unreachable!("builder yields ring or cap"),
    };
    let grid = annulus_grid(&center, r_inner, r_outer, cells)?;
    let params = solve_params(config, SolveParams::default());
    let res = discrete_modulus(&family, grid, params.clone())?;
    let analytic = analytic_modulus(&descriptor)?;

    doc.uint("dim", dim);
    doc.float("r_inner", r_inner);
    doc.float("r_outer", r_outer);
    doc.uint("curves", family.curve_count());
    doc.uint("grid_cells_per_axis", cells);
    doc.section("bracket");
    doc.float("lower", res.lower);
    doc.float("upper", res.upper);
    doc.float("gap", res.gap);
    doc.float("gap_tolerance", params.gap_tol);
    doc.uint("iterations", res.iterations);
    doc.boolean("converged", res.converged);
    doc.float("analytic_value", analytic);

    let exp = expect(config);
    let verdict_ok = match exp.value {
        Some(target) => {
            let tol = exp.rel_tol.unwrap_or(BRACKET_REL_TOL);
            let contained =
                res.lower <= target * (1.0 + tol) && res.upper >= target * (1.0 - tol);
            doc.float("expected_value", target);
            doc.float("containment_rel_tol", tol);
            doc.boolean("contained", contained);
            contained
        }
        None => true,
    };

    let mut t = PlotTable::new(&["curve", "multiplier"]);
    for (i, m) in res.multipliers.iter().enumerate() {
        t.row(&[i as f64, *m]);
    }
    Ok((Some(t), verdict_ok))
}

fn run_poletskii(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let map = config_map(config)?;
    let geo = geometry(config);
    let center = build_center(config.geometry.as_ref(), map.dim())?;
    let descriptor = family_descriptor(config, center)?;
    let defaults = PoletskiiParams::default();
    let params = PoletskiiParams {
        grid_cells_per_axis: geo.grid.unwrap_or(defaults.grid_cells_per_axis),
        curve_count: geo.curves.unwrap_or(defaults.curve_count),
        direction_count: geo.directions.unwrap_or(defaults.direction_count),
        solve: solve_params(config, defaults.solve),
    };
    let rep = check_poletskii(&map, &descriptor, params.clone())?;
    let passed = rep.slack >= POLETSKII_SLACK_TOLERANCE;

    doc.str("map", map.name());
    doc.uint("dim", map.dim());
    doc.uint("curves", params.curve_count);
    doc.uint("grid_cells_per_axis", params.grid_cells_per_axis);
    doc.uint("directions", params.direction_count);
    doc.section("weighted_inequality");
    doc.float("image_modulus_lower", rep.image_modulus_lower);
    doc.float("weighted_energy", rep.weighted_energy);
    doc.float("slack", rep.slack);
    doc.float("slack_tolerance", POLETSKII_SLACK_TOLERANCE);
    doc.uint("solver_iterations", rep.solver_iterations);
    doc.float("solver_gap", rep.solver_gap);
    doc.boolean("passed", passed);

    let mut t = PlotTable::new(&["image_modulus_lower", "weighted_energy", "slack"]);
    t.row(&[rep.image_modulus_lower, rep.weighted_energy, rep.slack]);
    Ok((Some(t), passed))
}

fn run_classify(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let map = config_map(config)?;
    let geo = geometry(config);
    let b = build_center(config.geometry.as_ref(), map.dim())?;
    let r_max = geo.r_max.unwrap_or(0.3);
    let levels = geo.levels.unwrap_or(12);
    let sphere_count =
        geo.directions.unwrap_or_else(|| crate::geometry::default_sphere_count(map.dim()));
    let rep = classify_with(&map, &b, r_max, levels, sphere_count)?;

    doc.str("map", map.name());
    doc.uint("dim", map.dim());
    doc.floats("center", b.coords());
    doc.float("r_max", r_max);
    doc.uint("levels", levels);
    doc.uint("sphere_count", rep.sphere_count);
    doc.section("classification");
    doc.str("verdict", rep.verdict.as_str());
    doc.str("reason", &rep.reason);
    doc.float("oscillation_floor", rep.thresholds.oscillation_floor);
    doc.float("magnitude_bound", rep.thresholds.magnitude_bound);
    doc.float("pole_growth", rep.thresholds.pole_growth);
    doc.float("removable_shrink", rep.thresholds.removable_shrink);
    doc.float("essential_retention", rep.thresholds.essential_retention);

    let mut t = PlotTable::new(&["radius", "oscillation", "min_magnitude", "max_magnitude"]);
    for (i, r) in rep.radii.iter().enumerate() {
        t.row(&[*r, rep.oscillations[i], rep.magnitude_ranges[i].0, rep.magnitude_ranges[i].1]);
    }
    let verdict_ok = match expect(config).verdict.as_deref() {
        Some(e) => {
            doc.str("expected_verdict", e);
            e == rep.verdict.as_str()
        }
        None => true,
    };
    Ok((Some(t), verdict_ok))
}

fn growth_ladder(geo: &GeometrySpec) -> Result<Vec<f64>> {
    match &geo.radii {
        Some(radii) => Ok(radii.clone()),
        None => radius_ladder(geo.r_max.unwrap_or(0.25), geo.levels.unwrap_or(8)),
    }
}

fn doc_growth(doc: &mut Doc, rep: &GrowthReport) {
    doc.str("envelope", rep.envelope.kind_name());
    match rep.envelope {
        GrowthEnvelope::Power { c, p } | GrowthEnvelope::LogPower { c, p } => {
            doc.float("constant", c);
            doc.float("p", p);
        }
        GrowthEnvelope::LogPowerLimit { p0 } => doc.float("p0", p0),
    }
    doc.uint("sphere_count", rep.sphere_count);
    let min_margin = rep.margins.iter().cloned().fold(f64::INFINITY, f64::min);
    doc.float("min_margin", min_margin);
    if let Some(trend) = rep.ratio_trend_to_zero {
        doc.boolean("ratio_trend_to_zero", trend);
    }
    doc.boolean("passed", rep.passed);
}

fn growth_plot(rep: &GrowthReport) -> PlotTable {
    let mut t = PlotTable::new(&["radius", "max_value", "envelope", "margin", "ratio"]);
    for (i, r) in rep.radii.iter().enumerate() {
        t.row(&[*r, rep.max_values[i], rep.envelope_values[i], rep.margins[i], rep.ratios[i]]);
    }
    t
}

fn run_growth(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let map = config_map(config)?;
    let hyp = hypothesis(config);
    let geo = geometry(config);
    let b = build_center(config.geometry.as_ref(), map.dim())?;
    let envelope = build_envelope(&hyp)?;
    let radii = growth_ladder(&geo)?;
    let rep = check_growth(&map, &b, &envelope, &radii)?;

    doc.str("map", map.name());
    doc.uint("dim", map.dim());
    doc.section("growth");
    doc_growth(doc, &rep);
    let verdict_ok = match expect(config).satisfied {
        Some(e) => {
            doc.boolean("expected_satisfied", e);
            e == rep.passed
        }
        None => rep.passed,
    };
    Ok((Some(growth_plot(&rep)), verdict_ok))
}

fn run_chain(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let hyp = hypothesis(config);
    let geo = geometry(config);
    let k0 = need(hyp.k0, "hypothesis.k0")?;
    let amount = need(hyp.amount, "hypothesis.amount")?;
    let p = need(hyp.p, "hypothesis.p")?;
    let n = geo.dim.unwrap_or(2);
    let r = need(geo.r, "geometry.r")?;
    let a_grid = match &geo.a_grid {
        Some(grid) => grid.clone(),
        None => {
            let count = geo.a_count.unwrap_or(24);
            (0..count)
                .map(|i| (-(std::f64::consts::E + 2.0 * i as f64)).exp())
                .collect()
        }
    };
    let rep = modulus_chain_bounds(k0, amount, p, n, r, &a_grid)?;

    doc.uint("k0", k0 as usize);
    doc.float("amount", amount);
    doc.float("p", p);
    doc.uint("dim", n);
    doc.float("r", r);
    doc.section("chain");
    doc.float("threshold", rep.threshold);
    doc.float("exponent", rep.exponent);
    doc.float("ceiling", rep.ceiling);
    doc.boolean("diverges", rep.diverges);
    doc.boolean("vacuous", rep.vacuous);
    match rep.crossing_index {
        Some(i) => doc.uint("crossing_index", i),
        None => doc.str("crossing_index", "none"),
    }

    let mut t = PlotTable::new(&[
        "a",
        "shell_modulus",
        "upper_bound",
        "lower_envelope",
        "contradicts",
    ]);
    for e in &rep.entries {
        t.row(&[
            e.a,
            e.shell_modulus,
            e.upper_bound,
            e.lower_envelope,
            if e.contradicts { 1.0 } else { 0.0 },
        ]);
    }
    let verdict_ok = match expect(config).diverging {
        Some(e) => {
            doc.boolean("expected_diverging", e);
            e == rep.diverges
        }
        None => true,
    };
    Ok((Some(t), verdict_ok))
}

fn run_ring_example(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let hyp = hypothesis(config);
    let q = need(hyp.q, "hypothesis.q")?;
    let p = need(hyp.p, "hypothesis.p")?;
    let n = geometry(config).dim.unwrap_or(2);
    let rep = verify_ring_example(q, p, n, hyp.alpha)?;

    doc.uint("dim", n);
    doc.float("q", q);
    doc.float("p", p);
    doc.float("alpha", rep.alpha);
    doc.section("ring_example");
    doc.boolean("lq_expected_integrable", rep.lq_expected_integrable);
    doc.float("lq_value", rep.lq.value);
    doc.float("lq_tail_slope", rep.lq.tail_slope);
    doc.boolean("lq_diverging", rep.lq.diverging);
    doc.boolean("lq_passed", rep.lq_passed);
    doc.boolean("growth_passed", rep.growth.passed);
    doc.str("verdict", rep.classification.verdict.as_str());
    doc.boolean("essential_passed", rep.essential_passed);
    doc.float("max_magnitude", rep.max_magnitude);
    doc.boolean("bounded_passed", rep.bounded_passed);
    doc.boolean("passed", rep.passed);
    Ok((Some(growth_plot(&rep.growth)), rep.passed))
}

fn run_folding_example(config: &RunConfig, doc: &mut Doc) -> Result<(Option<PlotTable>, bool)> {
    let n = geometry(config).dim.unwrap_or(2);
    let rep = verify_folding_example(n)?;

    doc.uint("dim", n);
    doc.section("folding_example");
    doc.uint("ki_checked", rep.ki_checked);
    doc.uint("ki_skipped", rep.ki_skipped);
    doc.float("ki_max_deviation", rep.ki_max_deviation);
    doc.boolean("ki_passed", rep.ki_passed);
    doc.uint("bound_checked", rep.bound_checked);
    doc.float("bound_max", rep.bound_max);
    doc.boolean("bound_passed", rep.bound_passed);
    doc.boolean("growth_passed", rep.growth.passed);
    doc.str("verdict", rep.classification.verdict.as_str());
    doc.boolean("essential_passed", rep.essential_passed);
    doc.float("probe_max_excess", rep.side_probe.max_excess);
    doc.uint("probe_below_count", rep.side_probe.below_count);
    doc.boolean("non_open_passed", rep.non_open_passed);
    let counts: Vec<f64> = rep.preimage_counts.iter().map(|(_, c)| *c as f64).collect();
    let inners: Vec<f64> = rep.preimage_counts.iter().map(|(r, _)| *r).collect();
    doc.floats("preimage_region_inner_radii", &inners);
    doc.floats("preimage_counts", &counts);
    doc.boolean("preimage_growth_passed", rep.preimage_growth_passed);
    doc.float("cluster_min_separation", rep.cluster_min_separation);
    doc.boolean("discreteness_passed", rep.discreteness_passed);
    doc.boolean("passed", rep.passed);
    Ok((Some(growth_plot(&rep.growth)), rep.passed))
}
