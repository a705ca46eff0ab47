//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! fails the test target if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use surfml::clustering::{cost_of, hartigan, kmeans_fit, squared, KMeansConfig};
use surfml::eval::{generalization_gap_curve, nmi, stratified_splits, GapConfig, KnnPipeline};
use surfml::geodesic::{pairwise_distances, random_pairs, ratio_sweep, refine_base_path, GeodesicConfig};
use surfml::graph::{graph_distances, Dissimilarity};
use surfml::mds::mds_embed;
use surfml::metric_learning::{
    build_pair_sets, fit, lmnn_objective, mmc_objective, transformed_distance, LinearTransform, ObjectiveKind,
    OptimizerConfig, TripleSet,
};
use surfml::seed;
use surfml::surfaces::{
    euclidean_surface, generic_integrand, helicoid_surface, hyperboloid_integrand, hyperboloid_surface,
    surface_from_spec, BasePointSet, Surface,
};
use surfml::synthetic::{football_like, helicoid_two_clusters, newsgroups_like, planted_partition, GaussianPairs};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn within(elapsed: Duration, limit: Duration, what: Outcome) -> Outcome {
    let detail = |d: String| format!("{d}; {:.1}s of {}s", elapsed.as_secs_f64(), limit.as_secs());
    match what {
        Ok(d) if elapsed <= limit => Ok(detail(d)),
        Ok(d) | Err(d) => Err(detail(d)),
    }
}

fn uniform_ball(rng: &mut seed::Rng, d: usize, r: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-r..r)).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= r * r {
            return p;
        }
    }
}

fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn geodesic_ratio() -> Outcome {
    let start = Instant::now();
    let h = hyperboloid_surface(2).unwrap();
    let pairs = random_pairs(2, 50, 2.0, 0);
    let ns = [0, 2, 4, 8, 16];
    let cfg = GeodesicConfig { n_samples: 32, ..GeodesicConfig::default() };
    let sweep = ratio_sweep(&h, &pairs, &ns, &cfg).map_err(|e| e.to_string())?;
    let means: Vec<f64> = sweep.iter().map(|p| p.mean).collect();
    let last = means[means.len() - 1];
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = ns.iter().zip(&means).map(|(n, m)| format!("n={n}:{m:.5}")).collect();
    within(
        start.elapsed(),
        Duration::from_secs(120),
        check((1.0..=1.01).contains(&last) && monotone, format!("mean ratios {}", shown.join(" "))),
    )
}

fn integrand_consistency() -> Outcome {
    let start = Instant::now();
    let h = hyperboloid_surface(2).unwrap();
    let mut rng = seed::rng(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = uniform_ball(&mut rng, 2, 5.0);
        let v = uniform_ball(&mut rng, 2, 5.0);
        worst = worst.max((hyperboloid_integrand(&k, &v) - generic_integrand(&h, &k, &v)).abs());
    }
    within(start.elapsed(), Duration::from_secs(1), check(worst <= 1e-10, format!("max deviation {worst:.2e}")))
}

fn euclidean_reduction() -> Outcome {
    let e = euclidean_surface(3).unwrap();
    let geo = GeodesicConfig::default();
    let mut rng = seed::rng(3);
    let mut worst_quad = 0.0f64;
    for _ in 0..100 {
        let flat: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
        let l = LinearTransform::from_flat(3, &flat).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        // (x−y)ᵀ LᵀL (x−y) assembled entry by entry
        let mut quad = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let g: f64 = (0..3).map(|r| flat[r * 3 + i] * flat[r * 3 + j]).sum();
                quad += diff[i] * g * diff[j];
            }
        }
        let d = transformed_distance(&e, &l, &x, &y, &geo).map_err(|e| e.to_string())?;
        worst_quad = worst_quad.max((d * d - quad).abs());
    }

    let mut worst_obj = 0.0f64;
    for _ in 0..20 {
        let n = 10;
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let flat: Vec<f64> = (0..9).map(|_| rng.random_range(-1.5..1.5)).collect();
        let l = LinearTransform::from_flat(3, &flat).unwrap();
        let lx: Vec<Vec<f64>> = pts.iter().map(|p| (0..3).map(|r| (0..3).map(|c| flat[r * 3 + c] * p[c]).sum()).collect()).collect();
        let m = |i: usize, j: usize| sq_euclidean(&lx[i], &lx[j]);
        let lambda = 0.6;
        let set = BasePointSet::new(pts.clone(), None).unwrap();
        let (mut pull, mut push) = (0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if labels[i] == labels[j] { pull += m(i, j) } else { push += m(i, j) }
            }
        }
        let mmc = mmc_objective(&e, &l, &set, &build_pair_sets(&labels), lambda, &geo).map_err(|e| e.to_string())?;
        worst_obj = worst_obj.max((mmc - (pull - lambda * push)).abs());

        let targets: Vec<Vec<usize>> = (0..n).map(|i| vec![(0..n).find(|&j| j != i && labels[j] == labels[i]).unwrap()]).collect();
        let triples = TripleSet::complete(&targets, &labels).map_err(|e| e.to_string())?;
        let mut expected = 0.0;
        for i in 0..n {
            let j = targets[i][0];
            expected += m(i, j);
            for t in (0..n).filter(|&t| labels[t] != labels[i]) {
                expected += lambda * (1.0 + m(i, j) - m(i, t)).max(0.0);
            }
        }
        let got = lmnn_objective(&e, &l, &set, &triples, lambda, &geo).map_err(|e| e.to_string())?;
        worst_obj = worst_obj.max((got - expected).abs());
    }
    check(
        worst_quad <= 1e-10 && worst_obj <= 1e-9,
        format!("max |ρ² − quadratic form| {worst_quad:.2e}, max objective deviation {worst_obj:.2e}"),
    )
}

fn exhaustive_optimum(dist: &Array2<f64>, k: usize) -> f64 {
    let n = dist.nrows();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    'outer: loop {
        best = best.min(cost_of(&labels, dist));
        for pos in 0..n {
            labels[pos] += 1;
            if labels[pos] < k {
                continue 'outer;
            }
            labels[pos] = 0;
        }
        return best;
    }
}

fn kmeans_identity() -> Outcome {
    let mut rng = seed::rng(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..30);
        let k = rng.random_range(1..6);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(-4.0..4.0)).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let dist = Array2::from_shape_fn((n, n), |(i, j)| sq_euclidean(&pts[i], &pts[j]));
        let mut centroid = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = pts.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            let mu: Vec<f64> = (0..2).map(|t| members.iter().map(|p| p[t]).sum::<f64>() / members.len() as f64).collect();
            centroid += members.iter().map(|p| sq_euclidean(p, &mu)).sum::<f64>();
        }
        worst = worst.max((cost_of(&labels, &dist) - centroid).abs());
    }
    let mut matched = 0;
    let mut below = 0;
    for inst in 0..50u64 {
        let n = 4 + (inst as usize % 5);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let dist = Array2::from_shape_fn((n, n), |(i, j)| sq_euclidean(&pts[i], &pts[j]));
        let optimum = exhaustive_optimum(&dist, 2);
        let fit = kmeans_fit(&dist, &KMeansConfig { k: 2, seed: inst, ..Default::default() }).map_err(|e| e.to_string())?;
        if fit.cost() < optimum - 1e-9 {
            below += 1;
        }
        if (fit.cost() - optimum).abs() <= 1e-9 * (1.0 + optimum) {
            matched += 1;
        }
    }
    check(
        worst <= 1e-9 && matched >= 45 && below == 0,
        format!("centroid deviation {worst:.2e}; optimum matched on {matched}/50, below optimum {below}"),
    )
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

fn monotonicity() -> Outcome {
    let tol_geo = GeodesicConfig { n_intermediate: 4, n_samples: 8, quadrature_points: 8, max_sweeps: 60, window: 5, rel_tol: 1e-5, seed: 0 };
    let mut rng = seed::rng(5);
    let mut runs = [0usize; 4];
    let mut failures = Vec::new();

    for name in ["hyperboloid:2", "helicoid", "monge:sinusoid", "monge:paraboloid"] {
        let s = surface_from_spec(name).unwrap();
        for t in 0..10 {
            let (u, w) = (uniform_ball(&mut rng, 2, 2.0), uniform_ball(&mut rng, 2, 2.0));
            let r = refine_base_path(s.as_ref(), &u, &w, &tol_geo, t).map_err(|e| e.to_string())?;
            runs[0] += 1;
            if !non_increasing(&r.trace) {
                failures.push(format!("path {name}/{t}"));
            }
        }
    }
    for t in 0..50 {
        let n = rng.random_range(5..30);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| uniform_ball(&mut rng, 2, 3.0)).collect();
        let dist = Array2::from_shape_fn((n, n), |(i, j)| sq_euclidean(&pts[i], &pts[j]).sqrt());
        let init: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let run = hartigan(&dist, init, 3, 100);
        runs[1] += 1;
        if !non_increasing(&run.trace) {
            failures.push(format!("hartigan/{t}"));
        }
    }
    for name in ["euclidean:2", "hyperboloid:2", "helicoid"] {
        let s = surface_from_spec(name).unwrap();
        for kind in [ObjectiveKind::Mmc, ObjectiveKind::Lmnn] {
            let pts: Vec<Vec<f64>> = (0..12).map(|_| uniform_ball(&mut rng, 2, 1.5)).collect();
            let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
            let set = BasePointSet::new(pts, None).unwrap();
            let opt = OptimizerConfig { max_iters: 15, n_target_neighbors: 2, ..Default::default() };
            let r = fit(s.as_ref(), &set, &labels, kind, &opt, &tol_geo).map_err(|e| e.to_string())?;
            runs[2] += 1;
            if !non_increasing(&r.trace.iter().map(|t| t.value).collect::<Vec<_>>()) {
                failures.push(format!("fit {name}/{kind:?}"));
            }
        }
    }
    for (t, name) in ["euclidean:2", "hyperboloid:2", "hyperboloid:3"].iter().enumerate() {
        let s = surface_from_spec(name).unwrap();
        let g = planted_partition("m", &[8, 7, 9], &[3.0; 3], &[1.0; 3], t as u64).map_err(|e| e.to_string())?;
        let delta = graph_distances(&g).map_err(|e| e.to_string())?;
        let opt = OptimizerConfig { max_iters: 300, rel_tol: 1e-10, ..Default::default() };
        let emb = mds_embed(s.as_ref(), &delta, 0.8, &opt, &tol_geo, t as u64).map_err(|e| e.to_string())?;
        runs[3] += 1;
        if !non_increasing(&emb.trace.iter().map(|t| t.value).collect::<Vec<_>>()) {
            failures.push(format!("mds {name}"));
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{} path, {} Hartigan, {} fit and {} MDS runs; increases in {:?}",
            runs[0], runs[1], runs[2], runs[3], failures
        ),
    )
}

fn helicoid_clusters() -> Outcome {
    let start = Instant::now();
    let h = helicoid_surface();
    let geo = GeodesicConfig { n_intermediate: 4, n_samples: 8, quadrature_points: 8, max_sweeps: 50, window: 5, rel_tol: 1e-4, seed: 0 };
    let (mut euclid, mut learned) = (0.0, 0.0);
    let mut per_seed = Vec::new();
    for s in 0..5u64 {
        let (train, train_labels) = helicoid_two_clusters(80, s);
        let (test, truth) = helicoid_two_clusters(60, s + 1000);
        let opt = OptimizerConfig { max_iters: 50, seed: s, ..Default::default() };
        let l = fit(&h, &train, &train_labels, ObjectiveKind::Mmc, &opt, &geo).map_err(|e| e.to_string())?.transform;
        let dist = squared(&pairwise_distances(&h, &test, Some(&l), &geo).map_err(|e| e.to_string())?);
        let km = KMeansConfig { k: 2, seed: s, ..Default::default() };
        let ours = nmi(kmeans_fit(&dist, &km).map_err(|e| e.to_string())?.labels(), &truth).unwrap();
        let ambient: Vec<Vec<f64>> = test.points().iter().map(|b| h.map(b)).collect();
        let n = ambient.len();
        let e = Array2::from_shape_fn((n, n), |(i, j)| sq_euclidean(&ambient[i], &ambient[j]));
        let base = nmi(kmeans_fit(&e, &km).map_err(|e| e.to_string())?.labels(), &truth).unwrap();
        per_seed.push(format!("{base:.2}/{ours:.2}"));
        euclid += base / 5.0;
        learned += ours / 5.0;
    }
    within(
        start.elapsed(),
        Duration::from_secs(600),
        check(
            euclid <= 0.3 && learned >= 0.9,
            format!("NMI Euclidean k-means {euclid:.3}, helicoid+MMC {learned:.3} (per seed {})", per_seed.join(" ")),
        ),
    )
}

fn football_knn() -> Outcome {
    let start = Instant::now();
    let g = football_like(0);
    let delta = graph_distances(&g).map_err(|e| e.to_string())?;
    let (labels, _) = g.class_indices();
    let splits = stratified_splits(&labels, 10, 0.2, 7).map_err(|e| e.to_string())?;
    let geo = GeodesicConfig::default();
    let ks = [1, 3, 5];
    let mds = OptimizerConfig { max_iters: 2000, rel_tol: 1e-9, ..Default::default() };
    let (dim, tau) = (3, 2.0);
    let mut table = Vec::new();
    for spec in [format!("euclidean:{dim}"), format!("hyperboloid:{dim}")] {
        let s = surface_from_spec(&spec).unwrap();
        let emb = mds_embed(s.as_ref(), &delta, tau, &mds, &geo, 0).map_err(|e| e.to_string())?;
        for learner in [None, Some((ObjectiveKind::Lmnn, OptimizerConfig::default()))] {
            let p = KnnPipeline { surface: s.as_ref(), geodesic: geo.clone(), learner };
            let means: Vec<f64> = p
                .evaluate(&emb.points, &labels, &splits, 3, &ks)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|r| r.mean)
                .collect();
            table.push(means);
        }
    }
    let (euclid, hyper_ml) = (&table[0], &table[3]);
    let ok = (0..ks.len()).all(|i| hyper_ml[i] < euclid[i] && hyper_ml[i] <= 0.40);
    let fmt = |v: &Vec<f64>| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/");
    within(
        start.elapsed(),
        Duration::from_secs(1800),
        check(
            ok,
            format!(
                "mean error for k=1/3/5: Euclidean {}, Euclidean+LMNN {}, hyperbolic {}, hyperbolic+LMNN {}",
                fmt(&table[0]),
                fmt(&table[1]),
                fmt(&table[2]),
                fmt(&table[3])
            ),
        ),
    )
}

fn newsgroups_delta() -> Outcome {
    let h = hyperboloid_surface(3).unwrap();
    let geo = GeodesicConfig::default();
    let (mut plain, mut learned) = (0.0, 0.0);
    for s in 0..5u64 {
        let g = newsgroups_like(500, s).map_err(|e| e.to_string())?;
        let (labels, _) = g.class_indices();
        let delta: Dissimilarity = graph_distances(&g).map_err(|e| e.to_string())?;
        let mds = OptimizerConfig { max_iters: 300, rel_tol: 1e-9, ..Default::default() };
        let emb = mds_embed(&h, &delta, 1.0, &mds, &geo, s).map_err(|e| e.to_string())?;
        let labelled = &stratified_splits(&labels, 1, 0.7, s).map_err(|e| e.to_string())?[0].train;
        let train = emb.points.subset(labelled);
        let train_labels: Vec<usize> = labelled.iter().map(|&i| labels[i]).collect();
        let l = fit(&h, &train, &train_labels, ObjectiveKind::Mmc, &OptimizerConfig::default(), &geo)
            .map_err(|e| e.to_string())?
            .transform;
        let km = KMeansConfig { k: 20, seed: s, ..Default::default() };
        let before = squared(&pairwise_distances(&h, &emb.points, None, &geo).map_err(|e| e.to_string())?);
        let after = squared(&pairwise_distances(&h, &emb.points, Some(&l), &geo).map_err(|e| e.to_string())?);
        plain += nmi(kmeans_fit(&before, &km).map_err(|e| e.to_string())?.labels(), &labels).unwrap() / 5.0;
        learned += nmi(kmeans_fit(&after, &km).map_err(|e| e.to_string())?.labels(), &labels).unwrap() / 5.0;
    }
    check(learned >= plain, format!("mean NMI plain {plain:.4}, metric-learned {learned:.4}, delta {:+.4}", learned - plain))
}

fn gap_trend() -> Outcome {
    let h = hyperboloid_surface(2).unwrap();
    let config = GapConfig::default();
    let curve = generalization_gap_curve(&h, &GaussianPairs::default(), &config, &OptimizerConfig::default(), &GeodesicConfig::default(), 0)
        .map_err(|e| e.to_string())?;
    let at = |m: usize| curve.iter().find(|p| p.m == m).map(|p| p.mean_gap).unwrap();
    let shown: Vec<String> = curve.iter().map(|p| format!("m={}:{:.4}", p.m, p.mean_gap)).collect();
    check(at(400) < at(25), format!("mean gap over {} trials {}", config.n_trials, shown.join(" ")))
}

fn run_cli(dir: &Path, config: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_surfml"))
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(dir)
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).map(|r| r.flatten().map(|e| e.path()).collect()).unwrap_or_default();
    v.sort();
    v
}

fn cli_determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = root.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 11,
  "geodesic": {"n_intermediate": 3, "n_samples": 6, "quadrature_points": 8, "max_sweeps": 30, "window": 3},
  "optimizer": {"max_iters": 5},
  "mds": {"optimizer": {"max_iters": 60}},
  "knn": {"ks": [1, 3], "n_splits": 3, "dim": 2},
  "gap": {"m_values": [10, 20], "n_trials": 2, "pool_pairs": 500}
}"#,
    )
    .map_err(|e| e.to_string())?;
    let transform = root.path().join("fixed_transform.csv");
    std::fs::write(&transform, "l1,l2\n1.2,0.1\n0,0.8\n").map_err(|e| e.to_string())?;
    let transform = transform.to_string_lossy().into_owned();

    let commands: Vec<Vec<&str>> = vec![
        vec!["embed", "--dataset", "synthetic:football", "--surface", "hyperboloid:2"],
        vec!["learn", "--points", "synthetic:helicoid-two-clusters:24", "--surface", "helicoid", "--objective", "mmc"],
        vec!["learn", "--points", "synthetic:gaussian-pairs:30", "--surface", "hyperboloid:2", "--objective", "lmnn"],
        vec!["cluster", "--points", "synthetic:helicoid-two-clusters:24", "--surface", "helicoid", "--transform", &transform],
        vec!["knn", "--points", "synthetic:gaussian-pairs:40", "--surface", "hyperboloid:2"],
        vec!["knn", "--dataset", "synthetic:football"],
        vec!["geodesic", "--surface", "helicoid", "--x=-0.5,1", "--y=1.2,-0.3"],
        vec!["geodesic", "--sweep", "--surface", "hyperboloid:2", "--pairs", "6", "--n-values", "0,2,4"],
        vec!["gap-curve", "--surface", "hyperboloid:2"],
    ];
    let mut compared = 0;
    for (c, args) in commands.iter().enumerate() {
        let a = root.path().join(format!("a{c}"));
        let b = root.path().join(format!("b{c}"));
        run_cli(&a, &config, 1, args)?;
        run_cli(&b, &config, 2, args)?;
        let (fa, fb) = (files(&a), files(&b));
        if fa.is_empty() || fa.iter().map(|p| p.file_name()).ne(fb.iter().map(|p| p.file_name())) {
            return Err(format!("{args:?}: output file sets differ"));
        }
        for (x, y) in fa.iter().zip(&fb) {
            let (bx, by) = (std::fs::read(x).map_err(|e| e.to_string())?, std::fs::read(y).map_err(|e| e.to_string())?);
            if bx != by {
                return Err(format!("{args:?}: {} differs between runs", x.file_name().unwrap().to_string_lossy()));
            }
            if !String::from_utf8_lossy(&bx).contains("# config_hash: ") {
                return Err(format!("{}: no config hash header", x.display()));
            }
            compared += 1;
        }
    }
    Ok(format!("{} commands, {compared} output files bit-identical across reruns with 1 and 2 threads", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("geodesic approximation ratio", geodesic_ratio),
        ("hyperboloid integrand consistency", integrand_consistency),
        ("Euclidean reduction", euclidean_reduction),
        ("k-means identity and exhaustive oracle", kmeans_identity),
        ("monotonicity suite", monotonicity),
        ("helicoid two-cluster pipeline", helicoid_clusters),
        ("football kNN ordering", football_knn),
        ("newsgroups clustering delta", newsgroups_delta),
        ("generalization gap trend", gap_trend),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {}: {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
