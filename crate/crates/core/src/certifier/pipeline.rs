use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::config::{PlissPolicy, RunConfig};
use super::report::{derive_verdict, num, CertificationReport, CheckRecord};
use crate::cocycle::{adapted_metric, log_conorm_sequence, nue_certificate, nuh_certificate, pliss_density, NUECertificate, SequenceKind};
use crate::error::{Error, Result};
use crate::linalg::Spectrum;
use crate::maps::{MapModel, OrbitSegment, StatePoint, ZERO_DERIVATIVE_TOL};
use crate::periodic::{find_periodic_points, transported_splitting, write_orbits_csv, PeriodicOrbit};
use crate::shadowing::{
    build_conjugacy, conjugacy_defect, contraction_decay_check, eigenvalue_bound_check, holder_estimate, shadowing_constants,
    ConjugacyModel, DecayParams, EigenVerdict, ShadowingTable,
};
use crate::splitting::{
    cone_field_iterate, domination_check, extension_radius, hyperbolic_set_certificate, periodic_field,
    splitting_continuity_modulus, ConeSpec, SplittingField, RHO_ANGLE,
};

pub const TOOL: &str = "hypcert";
const TORUS_SCAN_GRID: usize = 256;
const CONE_AGREEMENT: f64 = 1e-6;
const NATURALITY_TOL: f64 = 1e-6;
const NATURALITY_PERIOD: usize = 8;
const DEFECT_GRID: usize = 4096;

/// Report together with the intermediate data written as CSV artifacts.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub report: CertificationReport,
    pub orbits: Vec<PeriodicOrbit<f64>>,
    pub shadowing: Option<ShadowingTable<f64>>,
    pub field: Option<SplittingField<f64>>,
    pub conjugacy: Option<ConjugacyModel<f64>>,
}

fn arr(xs: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(xs.into_iter().map(num).collect())
}

fn local_diffeo(model: &MapModel<f64>, cfg: &RunConfig) -> CheckRecord {
    let grid = if model.dimension() == 1 { cfg.adapted_metric.grid } else { TORUS_SCAN_GRID };
    let mut rec = CheckRecord::new("local_diffeo").input("grid", grid);
    match model.min_conorm_scan(grid) {
        Ok((c, at)) => {
            rec.constant("min_conorm", num(c));
            rec.constant("argmin", arr(at.coords().iter().copied()));
            let ok = c > ZERO_DERIVATIVE_TOL && (model.dimension() == 1 || model.is_invertible());
            let detail = if ok {
                format!("min conorm {c:.6e} > 0")
            } else {
                format!("derivative degenerates near {:?} (conorm {c:.3e})", at.coords())
            };
            rec.finish(ok, detail)
        }
        Err(e) => rec.error(e),
    }
}

fn nue_record(orbits: &[PeriodicOrbit<f64>], max_period: usize) -> (CheckRecord, Option<NUECertificate<f64>>) {
    let rec = CheckRecord::new("nue").input("max_period", max_period);
    match nue_certificate(orbits) {
        Ok(cert) => {
            let mut rec = rec;
            rec.constant("varsigma", num(cert.varsigma));
            rec.constant("eta", num(cert.eta));
            rec.constant("orbits", cert.margins.len());
            rec.constant("violations", cert.violations.len());
            let detail = format!("varsigma = {:.6e} over {} orbits", cert.varsigma, cert.margins.len());
            (rec.finish(cert.passed(), detail), Some(cert))
        }
        Err(e) => (rec.error(e), None),
    }
}

fn nuh_record(orbits: &[PeriodicOrbit<f64>], max_period: usize) -> (CheckRecord, Option<f64>) {
    let rec = CheckRecord::new("nuh").input("max_period", max_period);
    match nuh_certificate(orbits) {
        Ok(cert) => {
            let mut rec = rec;
            rec.constant("varsigma", num(cert.varsigma));
            rec.constant("eta", num(cert.eta));
            rec.constant("orbits", cert.orbits.len());
            rec.constant("violations", cert.violations.len());
            let detail = format!("varsigma = {:.6e} over {} orbits", cert.varsigma, cert.orbits.len());
            let ok = cert.passed();
            (rec.finish(ok, detail), Some(cert.varsigma))
        }
        Err(e) => (rec.error(e), None),
    }
}

/// Hyperbolic-time counts along periodic orbit sequences against the
/// Pliss lower bound.
fn pliss_record(model: &MapModel<f64>, orbits: &[PeriodicOrbit<f64>], varsigma: Option<f64>, cfg: &RunConfig) -> CheckRecord {
    let pc = &cfg.pliss;
    let rec = CheckRecord::new("pliss").input("sequences", pc.sequences).input("length", pc.length);
    let Some(varsigma) = varsigma.filter(|v| *v > 0.0 && *v < 1.0) else {
        return rec.skip("no uniform varsigma in (0, 1) available");
    };
    if orbits.is_empty() {
        return rec.skip("no periodic orbits");
    }
    let vp = match pc.policy {
        PlissPolicy::Midpoint => varsigma.sqrt(),
        PlissPolicy::Fixed => pc.varsigma_prime.unwrap_or(f64::NAN),
    };
    let mut rec = rec.input("varsigma_prime", num(vp));
    let mut worst_ratio = f64::INFINITY;
    let mut failures = 0;
    for i in 0..pc.sequences {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1_000_000 + i as u64);
        let o = &orbits[rng.gen_range(0..orbits.len())];
        let t = o.period;
        let len = pc.length.max(t);
        let segment = OrbitSegment { model_id: model.id(), points: (0..=len).map(|j| o.points[j % t]).collect() };
        let seq = if model.dimension() == 1 {
            log_conorm_sequence(model, &segment, SequenceKind::InverseNorm, None)
        } else {
            transported_splitting(o).and_then(|(_, u)| {
                let u = u.ok_or_else(|| Error::SplittingUndefined("no unstable direction".into()))?;
                let dirs: Vec<_> = (0..=len).map(|j| u[j % t]).collect();
                log_conorm_sequence(model, &segment, SequenceKind::UnstableInverseNorm, Some(&dirs))
            })
        };
        let density = seq.and_then(|s| pliss_density(&s, varsigma, vp));
        match density {
            Ok(d) => {
                if d.actual_count < d.guaranteed_count {
                    failures += 1;
                }
                if d.guaranteed_count > 0 {
                    worst_ratio = worst_ratio.min(d.actual_count as f64 / d.guaranteed_count as f64);
                }
            }
            Err(e) => return rec.error(e),
        }
    }
    rec.constant("failures", failures);
    rec.constant("min_actual_over_guaranteed", num(worst_ratio));
    rec.finish(failures == 0, format!("{} sequences, {failures} below the guaranteed count", pc.sequences))
}

fn shadowing_record(model: &MapModel<f64>, cfg: &RunConfig) -> (CheckRecord, Option<ShadowingTable<f64>>) {
    let sc = &cfg.shadowing;
    let mut rec = CheckRecord::new("shadowing")
        .input("trials", sc.trials)
        .input("alphas", arr(sc.alphas.iter().copied()))
        .input("max_period", sc.max_period);
    match shadowing_constants(model, sc.trials, &sc.alphas, sc.max_period, cfg.seed) {
        Ok(table) => {
            let failures: usize = table.rows.iter().map(|r| r.failures).sum();
            let within = table.rows.iter().all(|r| match table.bound {
                Some(c) => r.max_epsilon <= c * r.max_gap * (1.0 + 1e-6) + 1e-15,
                None => r.max_ratio.is_finite(),
            });
            rec.constant("bound", table.bound.map(num).unwrap_or(Value::Null));
            rec.constant("max_epsilon", arr(table.rows.iter().map(|r| r.max_epsilon)));
            rec.constant("max_ratio", arr(table.rows.iter().map(|r| r.max_ratio)));
            rec.constant("failures", failures);
            let detail = format!(
                "{failures} failed trials, worst eps/gap {:.4e}",
                table.rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max)
            );
            (rec.finish(failures == 0 && within, detail), Some(table))
        }
        Err(e) => (rec.error(e), None),
    }
}

struct ConjugacyStage {
    records: Vec<CheckRecord>,
    model: Option<ConjugacyModel<f64>>,
}

fn conjugacy_stage(model: &MapModel<f64>, orbits: &[PeriodicOrbit<f64>], cfg: &RunConfig) -> ConjugacyStage {
    let skipped = |why: &str| ConjugacyStage {
        records: ["conjugacy", "holder", "eigenvalue_bound"].into_iter().map(|id| CheckRecord::new(id).skip(why)).collect(),
        model: None,
    };
    let Some(cc) = &cfg.conjugacy else {
        return skipped("conjugacy stage not configured");
    };
    if model.degree() != Some(2) {
        return skipped("conjugacy is built against the doubling map");
    }
    let f = MapModel::doubling();
    let rec = CheckRecord::new("conjugacy").input("resolution", cc.resolution);
    let h = match build_conjugacy(model, &f, cc.resolution) {
        Ok(h) => h,
        Err(e) => {
            let mut out = skipped("conjugacy unavailable");
            out.records[0] = rec.error(e);
            return out;
        }
    };
    let mut rec = rec;
    let defect = conjugacy_defect(&h, model, &f, DEFECT_GRID);
    let small: Vec<_> = orbits.iter().filter(|o| o.period <= NATURALITY_PERIOD).cloned().collect();
    let naturality = h.naturality_error(&small);
    let monotone = h.is_strictly_monotone();
    rec.constant("defect", num(defect));
    rec.constant("defect_bound", num(h.defect_bound));
    rec.constant("naturality_error", num(naturality));
    rec.constant("monotone", monotone);
    let ok = defect < h.defect_bound && monotone && naturality < NATURALITY_TOL;
    let mut records = vec![rec.finish(ok, format!("defect {defect:.3e}, naturality {naturality:.3e}"))];

    let lambda_hat = 0.5;
    let rec = CheckRecord::new("holder").input("pairs", cc.holder_pairs).input("lambda_hat", num(lambda_hat));
    let est = match holder_estimate(&h, cc.holder_pairs, cfg.seed) {
        Ok(e) => e,
        Err(e) => {
            records.push(rec.error(e));
            records.push(CheckRecord::new("eigenvalue_bound").skip("no Hölder estimate"));
            return ConjugacyStage { records, model: Some(h) };
        }
    };
    let mut rec = rec;
    rec.constant("k", num(est.k));
    rec.constant("holder_exponent", num(est.holder_exponent));
    rec.constant("fit_exponents", arr([est.fit_exponents.0, est.fit_exponents.1]));
    rec.constant("exponent_cap", est.exponent_cap.map(num).unwrap_or(Value::Null));
    rec.constant("residual", num(est.residual));
    match contraction_decay_check(model, &est, &DecayParams::new(lambda_hat, cfg.seed)) {
        Ok(d) => {
            rec.constant("decay_worst_margin", num(d.worst_margin));
            let detail = match &d.violation {
                None => format!("decay inequality holds, worst margin {:.4e}", d.worst_margin),
                Some(v) => format!("violated at j = {} for x = {:.6e}, y = {:.6e}", v.j, v.x.x(), v.y.x()),
            };
            records.push(rec.finish(d.passed, detail));
        }
        Err(e) => records.push(rec.error(e)),
    }

    let alpha = est.holder_exponent;
    let beta = alpha * alpha;
    let mut rec = CheckRecord::new("eigenvalue_bound").input("max_period", cc.eigen_max_period).input("beta", num(beta));
    let mut counts = [0usize; 3];
    for o in orbits.iter().filter(|o| o.period <= cc.eigen_max_period) {
        let lambda = lambda_hat.powf(alpha * o.period as f64);
        match eigenvalue_bound_check(model, o, lambda, beta, cfg.seed) {
            Ok(c) => match c.verdict {
                EigenVerdict::Pass => counts[0] += 1,
                EigenVerdict::Inapplicable => counts[1] += 1,
                EigenVerdict::ConclusionViolated => counts[2] += 1,
            },
            Err(_) => counts[1] += 1,
        }
    }
    rec.constant("pass", counts[0]);
    rec.constant("inapplicable", counts[1]);
    rec.constant("conclusion_violated", counts[2]);
    let detail = format!("{} pass, {} inapplicable, {} conclusion violated", counts[0], counts[1], counts[2]);
    records.push(rec.finish(counts[2] == 0, detail));
    ConjugacyStage { records, model: Some(h) }
}

fn eigen_cone(model: &MapModel<f64>, width: f64) -> Result<ConeSpec<f64>> {
    let lin = model.linear_model().ok_or_else(|| Error::Unsupported { model: model.id(), what: "no linear model".into() })?;
    match lin.jacobian(&StatePoint::torus(0.0, 0.0))?.spectrum() {
        Spectrum::Real { vectors, .. } => ConeSpec::new(vectors[0], vectors[1], width),
        _ => Err(Error::SplittingUndefined("linear model is not hyperbolic".into())),
    }
}

fn splitting_stage(model: &MapModel<f64>, orbits: &[PeriodicOrbit<f64>], cfg: &RunConfig) -> (Vec<CheckRecord>, Option<SplittingField<f64>>) {
    let sc = &cfg.splitting;
    let ids = ["splitting", "domination", "continuity", "cone_field", "hyperbolic_set"];
    let samples: Vec<_> = orbits.iter().filter(|o| o.period <= sc.max_period).cloned().collect();
    let rec = CheckRecord::new("splitting").input("max_period", sc.max_period);
    let field = match periodic_field(model, &samples) {
        Ok(f) => f,
        Err(e) => {
            let mut recs = vec![rec.error(e)];
            recs.extend(ids[1..].iter().map(|id| CheckRecord::new(id).skip("no splitting field")));
            return (recs, None);
        }
    };
    let mut recs = Vec::new();
    let mut rec = rec;
    rec.constant("samples", field.len());
    rec.constant("invariance_residual", num(field.invariance_residual()));
    recs.push(rec.finish(field.is_invariant(), format!("{} samples, residual {:.3e}", field.len(), field.invariance_residual())));

    let rec = CheckRecord::new("domination").input("l", sc.domination_iterate);
    recs.push(match domination_check(model, &field, sc.domination_iterate) {
        Ok(d) => {
            let mut rec = rec;
            rec.constant("lambda", num(d.lambda));
            rec.finish(d.passed(), format!("lambda = {:.6e}", d.lambda))
        }
        Err(e) => rec.error(e),
    });

    let rec = CheckRecord::new("continuity").input("bins", sc.modulus_bins).input("threshold", num(RHO_ANGLE));
    recs.push(match splitting_continuity_modulus(&field, sc.modulus_bins) {
        Ok(table) => {
            let mut rec = rec;
            let rho = extension_radius(&table, RHO_ANGLE);
            rec.constant("radii", arr(table.iter().map(|b| b.radius)));
            rec.constant("max_angle", arr(table.iter().map(|b| b.max_angle)));
            rec.constant("rho", rho.map(num).unwrap_or(Value::Null));
            let detail = match rho {
                Some(r) => format!("angle below {RHO_ANGLE} within radius {r:.4e}"),
                None => "no radius with small angle oscillation".into(),
            };
            rec.finish(rho.is_some(), detail)
        }
        Err(e) => rec.error(e),
    });

    let rec = CheckRecord::new("cone_field").input("width", num(sc.cone_width)).input("steps", sc.cone_steps);
    recs.push(match eigen_cone(model, sc.cone_width).and_then(|cone| {
        cone_field_iterate(model, &field.points, |_| cone, sc.cone_steps)
    }) {
        Ok(cf) => {
            let mut rec = rec;
            let angle = cf.max_angle_to(&field);
            rec.constant("angle_to_periodic_splitting", num(angle));
            rec.constant("convergence", cf.convergence.map(num).unwrap_or(Value::Null));
            rec.finish(angle <= CONE_AGREEMENT, format!("max angle {angle:.3e} to the periodic splitting"))
        }
        Err(e) => rec.error(e),
    });

    let rec = CheckRecord::new("hyperbolic_set").input("n_check", sc.n_check);
    recs.push(match hyperbolic_set_certificate(model, &field, sc.n_check) {
        Ok(h) => {
            let mut rec = rec;
            rec.constant("c", num(h.c));
            rec.constant("lambda", num(h.lambda));
            rec.finish(h.passed(), format!("c = {:.6e}, lambda = {:.6e}", h.c, h.lambda))
        }
        Err(e) => rec.error(e),
    });
    (recs, Some(field))
}

fn adapted_record(model: &MapModel<f64>, cert: Option<&NUECertificate<f64>>, cfg: &RunConfig) -> CheckRecord {
    let ac = &cfg.adapted_metric;
    let rec = CheckRecord::new("adapted_metric").input("horizon", ac.horizon).input("grid", ac.grid);
    let Some(cert) = cert else {
        return rec.skip("no NUE certificate");
    };
    match adapted_metric(model, cert, ac.horizon, ac.grid) {
        Ok(m) => {
            let mut rec = rec;
            rec.constant("sigma", num(m.sigma));
            rec.constant("sigma0", num(m.sigma0));
            rec.constant("argmin", num(m.argmin));
            rec.finish(m.sigma > 1.0, format!("one-step factor sigma = {:.6e}", m.sigma))
        }
        Err(e) => rec.error(e),
    }
}

/// Runs every stage; numerical failures are recorded in the report and
/// only configuration problems abort.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let mut checks = vec![local_diffeo(&model, cfg)];

    let rec = CheckRecord::new("periodic_orbits").input("max_period", cfg.max_period);
    let orbits = match find_periodic_points(&model, cfg.max_period) {
        Ok(set) => {
            let mut rec = rec;
            rec.constant("orbits", set.orbits.len());
            rec.constant("fixed_point_counts", (1..=cfg.max_period).map(|n| set.fixed_point_count(n)).collect::<Vec<_>>());
            rec.constant("gaps", set.gaps.len());
            let detail = format!("{} orbits, {} gaps", set.orbits.len(), set.gaps.len());
            checks.push(rec.finish(set.is_complete(), detail));
            set.orbits
        }
        Err(e) => {
            checks.push(rec.error(e));
            Vec::new()
        }
    };

    let circle = model.dimension() == 1;
    let (nue, varsigma) = if circle {
        let (rec, cert) = nue_record(&orbits, cfg.max_period);
        checks.push(rec);
        let v = cert.as_ref().map(|c| c.varsigma);
        (cert, v)
    } else {
        let (rec, v) = nuh_record(&orbits, cfg.max_period);
        checks.push(rec);
        (None, v)
    };
    checks.push(pliss_record(&model, &orbits, varsigma, cfg));
    let (rec, shadowing) = shadowing_record(&model, cfg);
    checks.push(rec);

    let conj = conjugacy_stage(&model, &orbits, cfg);
    checks.extend(conj.records);

    let mut field = None;
    if circle {
        checks.push(adapted_record(&model, nue.as_ref(), cfg));
    } else {
        let (recs, f) = splitting_stage(&model, &orbits, cfg);
        checks.extend(recs);
        field = f;
    }

    let verdict = derive_verdict(&checks);
    let report = CertificationReport {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        model: model.id(),
        seed: cfg.seed,
        config: serde_json::to_value(cfg).map_err(|e| Error::Config { field: "config".into(), message: e.to_string() })?,
        checks,
        verdict,
    };
    Ok(PipelineOutput { report, orbits, shadowing, field, conjugacy: conj.model })
}

/// Writes `report.json`, `summary.csv` and the CSV artifacts into `dir`;
/// returns the written paths.
pub fn emit_report(out: &PipelineOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut file = |name: &str, body: &dyn Fn(&mut Vec<u8>) -> Result<()>| -> Result<()> {
        let mut buf = Vec::new();
        body(&mut buf)?;
        let path = dir.join(name);
        std::fs::write(&path, buf)?;
        written.push(path);
        Ok(())
    };
    file("report.json", &|b| {
        b.extend_from_slice(out.report.to_json().as_bytes());
        Ok(())
    })?;
    file("summary.csv", &|b| out.report.write_summary_csv(b))?;
    file("orbits.csv", &|b| write_orbits_csv(&out.orbits, b))?;
    if let Some(t) = &out.shadowing {
        file("shadowing.csv", &|b| t.write_csv(b))?;
    }
    if let Some(f) = &out.field {
        file("splitting.csv", &|b| f.write_csv(b))?;
    }
    if let Some(h) = &out.conjugacy {
        file("conjugacy.txt", &|b| h.write_table(b))?;
    }
    Ok(written)
}
