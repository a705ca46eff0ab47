use std::fmt::Write as _;

use serde::Serialize;
use surfml::clustering::{kmeans_fit, squared};
use surfml::eval::{generalization_gap_curve, nmi, stratified_splits, EvalReport, KnnPipeline};
use surfml::geodesic::{pairwise_distances, random_pairs, ratio_sweep as sweep_ratios, refine_base_path};
use surfml::io::{self, Header, PointTable};
use surfml::mds::mds_embed;
use surfml::metric_learning::{fit, ObjectiveKind};
use surfml::optimize::DescentStatus;
use surfml::surfaces::{surface_from_spec, BasePointSet, SharedSurface};
use surfml::synthetic::GaussianPairs;

use crate::config::PipelineConfig;
use crate::data::{encode_labels, has_labels, load_graph_data, load_points};
use crate::Failure;

fn header(c: &PipelineConfig, command: &str, args: &impl Serialize) -> Header {
    Header::default()
        .with("tool", "surfml")
        .with("version", env!("CARGO_PKG_VERSION"))
        .with("command", command)
        .with("config_hash", c.hash(command, args))
        .with("seed", c.seed)
        .with("surface", &c.surface)
}

fn write(c: &PipelineConfig, name: &str, contents: &str) -> Result<(), Failure> {
    let path = c.out_dir.join(name);
    io::write_file(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn status_name(s: DescentStatus) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn objective_name(k: ObjectiveKind) -> &'static str {
    match k {
        ObjectiveKind::Mmc => "mmc",
        ObjectiveKind::Lmnn => "lmnn",
    }
}

fn surface(c: &PipelineConfig) -> Result<SharedSurface, Failure> {
    Ok(surface_from_spec(&c.surface)?)
}

fn require<'a>(value: &'a Option<String>, what: &str) -> Result<&'a str, Failure> {
    value.as_deref().ok_or_else(|| Failure::Input(format!("missing {what}")))
}

/// Points on the configured surface, with their class indices when every
/// point is labelled.
fn surface_points(c: &PipelineConfig, s: &SharedSurface) -> Result<(PointTable, BasePointSet, Option<Vec<usize>>), Failure> {
    let table = load_points(require(&c.points, "--points")?, c.seed)?;
    let dim = table.points[0].len();
    if dim != s.base_dim() {
        return Err(Failure::Input(format!("points have dimension {dim} but {} has base dimension {}", c.surface, s.base_dim())));
    }
    let set = BasePointSet::on_surface(s.as_ref(), table.points.clone(), None)?;
    let labels = has_labels(&table.labels).then(|| encode_labels(&table.labels));
    Ok((table, set, labels))
}

pub fn embed(c: &PipelineConfig) -> Result<(), Failure> {
    let data = load_graph_data(require(&c.dataset, "--dataset")?, c.seed)?;
    let s = surface(c)?;
    let emb = mds_embed(s.as_ref(), &data.delta, c.mds.tau, &c.mds.optimizer, &c.geodesic, c.seed)?;
    let h = header(c, "embed", &())
        .with("dataset", &data.name)
        .with("tau", c.mds.tau)
        .with("stress", emb.stress)
        .with("status", status_name(emb.status))
        .with("reinitializations", emb.reinitializations);
    let table = PointTable { ids: data.delta.ids.clone(), points: emb.points.points().to_vec(), labels: data.classes };
    write(c, "embedding.csv", &io::format_points(&h, &table))?;
    write(c, "stress_trace.csv", &io::format_trace(&h, &emb.trace))?;
    println!("stress {}", emb.stress);
    Ok(())
}

pub fn learn(c: &PipelineConfig) -> Result<(), Failure> {
    let s = surface(c)?;
    let (_, set, labels) = surface_points(c, &s)?;
    let labels = labels.ok_or_else(|| Failure::Input("learning needs a label for every point".into()))?;
    let result = fit(s.as_ref(), &set, &labels, c.objective, &c.optimizer, &c.geodesic)?;
    let h = header(c, "learn", &())
        .with("objective", objective_name(c.objective))
        .with("lambda", c.optimizer.lambda)
        .with("status", status_name(result.status));
    write(c, "transform.csv", &io::format_transform(&h, &result.transform))?;
    write(c, "objective_trace.csv", &io::format_trace(&h, &result.trace))?;
    let first = result.trace.first().map_or(f64::NAN, |r| r.value);
    let last = result.trace.last().map_or(f64::NAN, |r| r.value);
    println!("objective {first} -> {last} ({})", status_name(result.status));
    Ok(())
}

pub fn cluster(c: &PipelineConfig) -> Result<(), Failure> {
    let s = surface(c)?;
    let (table, set, labels) = surface_points(c, &s)?;
    let transform = c.transform.as_deref().map(io::read_transform).transpose()?;
    if let Some(l) = &transform {
        if l.dim() != s.base_dim() {
            return Err(Failure::Input(format!("transform is {0}×{0} but the surface has base dimension {1}", l.dim(), s.base_dim())));
        }
    }
    let mut dist = pairwise_distances(s.as_ref(), &set, transform.as_ref(), &c.geodesic)?;
    if c.kmeans.squared {
        dist = squared(&dist);
    }
    let assignment = kmeans_fit(&dist, &c.kmeans)?;
    let h = header(c, "cluster", &()).with("k", c.kmeans.k).with("transform", transform.is_some());
    write(c, "assignment.csv", &io::format_assignment(&h, &table.ids, assignment.labels()))?;
    let mut reports = vec![EvalReport::from_values("cost", vec![assignment.cost()])];
    if let Some(truth) = &labels {
        let score = nmi(assignment.labels(), truth)?;
        println!("nmi {score}");
        reports.push(EvalReport::from_values("nmi", vec![score]));
    }
    write(c, "cluster_report.csv", &io::format_reports(&h, &reports))?;
    println!("cost {}", assignment.cost());
    Ok(())
}

/// One table cell per (column, k).
struct Cell {
    column: String,
    report: EvalReport,
}

pub fn knn(c: &PipelineConfig) -> Result<(), Failure> {
    let learner = Some((c.objective, c.optimizer.clone()));
    let mut cells = Vec::new();
    let (dataset, labels) = if let Some(spec) = &c.dataset {
        let data = load_graph_data(spec, c.seed)?;
        if !has_labels(&data.classes) {
            return Err(Failure::Input(format!("{spec} has no class labels")));
        }
        let labels = encode_labels(&data.classes);
        let splits = stratified_splits(&labels, c.knn.n_splits, c.knn.test_frac, c.seed)?;
        for (name, spec) in [("Euclidean", format!("euclidean:{}", c.knn.dim)), ("Hyperbolic", format!("hyperboloid:{}", c.knn.dim))] {
            let s = surface_from_spec(&spec)?;
            let emb = mds_embed(s.as_ref(), &data.delta, c.mds.tau, &c.mds.optimizer, &c.geodesic, c.seed)?;
            for (suffix, learner) in [("", None), ("+ML", learner.clone())] {
                let pipeline = KnnPipeline { surface: s.as_ref(), geodesic: c.geodesic.clone(), learner };
                for report in pipeline.evaluate(&emb.points, &labels, &splits, c.seed, &c.knn.ks)? {
                    cells.push(Cell { column: format!("{name}{suffix}"), report: report.with_meta("tau", c.mds.tau) });
                }
            }
        }
        (data.name, labels)
    } else {
        let s = surface(c)?;
        let (_, set, labels) = surface_points(c, &s)?;
        let labels = labels.ok_or_else(|| Failure::Input("kNN needs a label for every point".into()))?;
        let splits = stratified_splits(&labels, c.knn.n_splits, c.knn.test_frac, c.seed)?;
        for (suffix, learner) in [("", None), ("+ML", learner)] {
            let pipeline = KnnPipeline { surface: s.as_ref(), geodesic: c.geodesic.clone(), learner };
            for report in pipeline.evaluate(&set, &labels, &splits, c.seed, &c.knn.ks)? {
                cells.push(Cell { column: format!("{}{suffix}", c.surface), report });
            }
        }
        let name = c.points.clone().unwrap_or_default();
        (name, labels)
    };

    let h = header(c, "knn", &())
        .with("dataset", &dataset)
        .with("points", labels.len())
        .with("splits", format!("{} stratified, test fraction {}", c.knn.n_splits, c.knn.test_frac))
        .with("objective", objective_name(c.objective));
    let reports: Vec<EvalReport> = cells.iter().map(|cell| cell.report.clone().with_meta("column", &cell.column)).collect();
    write(c, "knn_report.csv", &io::format_reports(&h, &reports))?;

    let mut columns: Vec<&str> = Vec::new();
    for cell in &cells {
        if !columns.contains(&cell.column.as_str()) {
            columns.push(&cell.column);
        }
    }
    let mut table = String::new();
    h.render(&mut table);
    let _ = write!(table, "{:<16}{:>4}", "dataset", "k");
    for col in &columns {
        let _ = write!(table, "  {col:>18}");
    }
    table.push('\n');
    for &k in &c.knn.ks {
        let _ = write!(table, "{:<16}{:>4}", dataset, k);
        for col in &columns {
            let cell = cells
                .iter()
                .find(|x| x.column == *col && x.report.metadata.get("k") == Some(&k.to_string()))
                .expect("every column has every k");
            let _ = write!(table, "  {:>18}", format!("{:.3} ± {:.3}", cell.report.mean, cell.report.std));
        }
        table.push('\n');
    }
    write(c, "knn_table.txt", &table)?;
    print!("{}", table.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}

#[derive(Serialize)]
struct GeodesicArgs<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

pub fn geodesic(c: &PipelineConfig, x: &[f64], y: &[f64]) -> Result<(), Failure> {
    let s = surface(c)?;
    for p in [x, y] {
        if p.len() != s.base_dim() {
            return Err(Failure::Input(format!("expected {} base coordinates, got {}", s.base_dim(), p.len())));
        }
    }
    let r = refine_base_path(s.as_ref(), x, y, &c.geodesic, c.geodesic.seed)?;
    let closed = if s.has_closed_form() { s.closed_form_distance(&s.map(x), &s.map(y)) } else { None };
    let h = header(c, "geodesic", &GeodesicArgs { x, y })
        .with("n_intermediate", c.geodesic.n_intermediate)
        .with("n_samples", c.geodesic.n_samples);
    let mut summary = String::new();
    h.render(&mut summary);
    summary.push_str("distance,closed_form,sweeps,converged\n");
    let _ = writeln!(
        summary,
        "{},{},{},{}",
        r.length,
        closed.map_or_else(String::new, |d| d.to_string()),
        r.sweeps,
        r.converged
    );
    write(c, "geodesic.csv", &summary)?;
    write(c, "path.csv", &io::format_path(&h, &r.path.rows(s.as_ref()), s.base_dim()))?;
    match closed {
        Some(d) => println!("distance {} (closed form {d})", r.length),
        None => println!("distance {}", r.length),
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepArgs {
    sweep: bool,
}

pub fn ratio_sweep(c: &PipelineConfig) -> Result<(), Failure> {
    let s = surface(c)?;
    let pairs = random_pairs(s.base_dim(), c.sweep.pairs, c.sweep.radius, c.seed);
    let points = sweep_ratios(s.as_ref(), &pairs, &c.sweep.n_values, &c.geodesic)?;
    let h = header(c, "geodesic", &SweepArgs { sweep: true })
        .with("pairs", c.sweep.pairs)
        .with("radius", c.sweep.radius)
        .with("n_samples", c.geodesic.n_samples);
    let mut out = String::new();
    h.render(&mut out);
    out.push_str("n_intermediate,mean_ratio,std_ratio,min_ratio,max_ratio\n");
    for p in &points {
        let _ = writeln!(out, "{},{},{},{},{}", p.n_intermediate, p.mean, p.std, p.min, p.max);
        println!("n = {:>3}  mean ratio {:.6}", p.n_intermediate, p.mean);
    }
    write(c, "ratio_sweep.csv", &out)
}

pub fn gap_curve(c: &PipelineConfig) -> Result<(), Failure> {
    let s = surface(c)?;
    if s.base_dim() != 2 {
        return Err(Failure::Input("the gap curve samples planar Gaussian pairs; use a surface with base dimension 2".into()));
    }
    let curve = generalization_gap_curve(s.as_ref(), &GaussianPairs::default(), &c.gap, &c.optimizer, &c.geodesic, c.seed)?;
    let h = header(c, "gap-curve", &()).with("trials", c.gap.n_trials);
    let mut out = String::new();
    h.render(&mut out);
    out.push_str("m,mean_gap,std_gap\n");
    for p in &curve {
        let _ = writeln!(out, "{},{},{}", p.m, p.mean_gap, p.std_gap);
        println!("m = {:>4}  gap {:.5} ± {:.5}", p.m, p.mean_gap, p.std_gap);
    }
    write(c, "gap_curve.csv", &out)
}
