//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use circles_core::ingest::{
    generate_synthetic, parse_ground_truth, parse_model_output, DatasetBundle, SyntheticConfig,
};
use circles_core::layout::{
    build_bar_scene, build_line_scene, build_scene, catmull_rom_closed, class_angle,
    ring_base_radius, value_radius, Mode, Point, Rings, ViewConfig,
};
use circles_core::metrics::{
    compute_all_matrices, compute_metric_matrix, confusion_all, metric_from_counts,
    ConfusionCounts, MetricId, MetricMatrix,
};
use circles_core::svg::{render_svg, SvgStyle};
use circles_service::{router, Store};
use parking_lot::RwLock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("metric correctness vs brute-force oracle", metric_correctness),
        ("complement identities", complement_identities),
        ("desk-scale throughput and repeatability", desk_scale_throughput),
        ("20-model scale claim", scale_claim),
        ("angular and radial geometry", geometry),
        ("spline interpolation and overshoot", spline_property),
        ("svg export structure", svg_export),
        ("service contract over http", service_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check)
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// --- independent oracle -------------------------------------------------

/// Expands a row to dense scores and takes the first maximum.
fn oracle_top1(row: &serde_json::Value, n: usize) -> usize {
    let mut dense = vec![0.0f64; n];
    if let Some(scores) = row.get("scores") {
        for (c, s) in scores.as_array().unwrap().iter().enumerate() {
            dense[c] = s.as_f64().unwrap();
        }
    } else {
        for pair in row["top_k"].as_array().unwrap() {
            dense[pair[0].as_u64().unwrap() as usize] = pair[1].as_f64().unwrap();
        }
    }
    let mut best = 0;
    for c in 0..n {
        if dense[c] > dense[best] {
            best = c;
        }
    }
    best
}

/// `(tp, fp, fn, tn)` of class `c` by a full scan.
fn oracle_counts(truths: &[usize], preds: &[usize], c: usize) -> [u64; 4] {
    let mut k = [0u64; 4];
    for (&t, &p) in truths.iter().zip(preds) {
        let idx = match (t == c, p == c) {
            (true, true) => 0,
            (false, true) => 1,
            (true, false) => 2,
            (false, false) => 3,
        };
        k[idx] += 1;
    }
    k
}

fn oracle_metric(metric: MetricId, [tp, fp, fn_, tn]: [u64; 4]) -> f64 {
    let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    match metric {
        MetricId::Accuracy => div(tp + tn, tp + fp + fn_ + tn),
        MetricId::Precision => div(tp, tp + fp),
        MetricId::Recall => div(tp, tp + fn_),
        MetricId::F1 => {
            let (p, r) = (div(tp, tp + fp), div(tp, tp + fn_));
            if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            }
        }
        MetricId::Specificity => div(tn, tn + fp),
        MetricId::FalsePositiveRate => div(fp, fp + tn),
        MetricId::FalseNegativeRate => div(fn_, fn_ + tp),
    }
}

fn random_documents(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let n = rng.gen_range(2..=10);
    let samples = rng.gen_range(1..=200);
    let models = rng.gen_range(1..=5);
    let labels: Vec<String> = (0..samples)
        .map(|i| format!(r#"{{"id":"s{i}","label":{}}}"#, rng.gen_range(0..n)))
        .collect();
    let gt = format!(r#"{{"class_count":{n},"samples":[{}]}}"#, labels.join(","));
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let docs = (0..models)
        .map(|m| {
            let rows: Vec<String> = (0..samples)
                .map(|i| {
                    if rng.gen_bool(0.5) {
                        let s: Vec<String> = (0..n)
                            .map(|_| grid[rng.gen_range(0..grid.len())].to_string())
                            .collect();
                        format!(r#"{{"id":"s{i}","scores":[{}]}}"#, s.join(","))
                    } else {
                        let k = rng.gen_range(0..=n.min(3));
                        let mut classes: Vec<usize> = (0..n).collect();
                        for j in 0..k {
                            let swap = rng.gen_range(j..n);
                            classes.swap(j, swap);
                        }
                        let pairs: Vec<String> = classes[..k]
                            .iter()
                            .map(|c| format!("[{c},{}]", grid[rng.gen_range(0..grid.len())]))
                            .collect();
                        format!(r#"{{"id":"s{i}","top_k":[{}]}}"#, pairs.join(","))
                    }
                })
                .collect();
            format!(
                r#"{{"model_name":"m{m}","class_count":{n},"predictions":[{}]}}"#,
                rows.join(",")
            )
        })
        .collect();
    (gt, docs)
}

fn bundle_from_documents(gt: &str, docs: &[String]) -> DatasetBundle {
    let gt = parse_ground_truth(gt.as_bytes()).unwrap();
    let n = gt.class_count();
    let models = docs
        .iter()
        .map(|d| parse_model_output(d.as_bytes(), n).unwrap())
        .collect();
    DatasetBundle::new(gt, models).unwrap()
}

// --- criteria -------------------------------------------------------------

fn metric_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut compared = 0usize;
    for round in 0..50 {
        let (gt_doc, docs) = random_documents(&mut rng);
        let bundle = bundle_from_documents(&gt_doc, &docs);
        let gt_json: serde_json::Value = serde_json::from_str(&gt_doc).unwrap();
        let n = gt_json["class_count"].as_u64().unwrap() as usize;
        let truths: Vec<usize> = gt_json["samples"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["label"].as_u64().unwrap() as usize)
            .collect();
        let matrices = compute_all_matrices(&bundle).map_err(|e| e.to_string())?;
        for (m, doc) in docs.iter().enumerate() {
            let doc: serde_json::Value = serde_json::from_str(doc).unwrap();
            let preds: Vec<usize> = doc["predictions"]
                .as_array()
                .unwrap()
                .iter()
                .map(|r| oracle_top1(r, n))
                .collect();
            let counts = confusion_all(bundle.ground_truth(), &bundle.models()[m])
                .map_err(|e| e.to_string())?;
            for c in 0..n {
                let want = oracle_counts(&truths, &preds, c);
                let got = counts[c];
                ensure!(
                    [got.tp, got.fp, got.fn_, got.tn] == want,
                    "round {round} model {m} class {c}: counts {got:?} vs oracle {want:?}"
                );
                for matrix in &matrices {
                    let expected = oracle_metric(matrix.metric, want);
                    let actual = matrix.values[m][c];
                    ensure!(
                        (actual - expected).abs() <= 1e-12,
                        "round {round} {} model {m} class {c}: {actual} vs {expected}",
                        matrix.metric
                    );
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("50 bundles, {compared} metric values within 1e-12, counts exact"))
}

fn complement_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut recall_checked = 0;
    let mut specificity_checked = 0;
    let mut f1_checked = 0;
    for i in 0..10_000 {
        // Mix small counts (zero denominators) with large ones.
        let hi = if i % 2 == 0 { 5 } else { 1_000_000 };
        let c = ConfusionCounts {
            tp: rng.gen_range(0..hi),
            fp: rng.gen_range(0..hi),
            fn_: rng.gen_range(0..hi),
            tn: rng.gen_range(0..hi),
        };
        let v = |m| metric_from_counts(m, &c);
        for m in MetricId::ALL {
            let x = v(m).value;
            ensure!((0.0..=1.0).contains(&x), "{m} = {x} for {c:?}");
        }
        if c.tp + c.fn_ > 0 {
            let sum = v(MetricId::Recall).value + v(MetricId::FalseNegativeRate).value;
            ensure!(sum == 1.0, "recall + fnr = {sum} for {c:?}");
            recall_checked += 1;
        }
        if c.fp + c.tn > 0 {
            let sum = v(MetricId::Specificity).value + v(MetricId::FalsePositiveRate).value;
            ensure!(sum == 1.0, "specificity + fpr = {sum} for {c:?}");
            specificity_checked += 1;
        }
        let f1 = v(MetricId::F1);
        if !f1.degenerate {
            let (p, r) = (v(MetricId::Precision).value, v(MetricId::Recall).value);
            ensure!(
                p.min(r) <= f1.value && f1.value <= p.max(r),
                "f1 {} outside [{}, {}] for {c:?}",
                f1.value,
                p.min(r),
                p.max(r)
            );
            f1_checked += 1;
        }
    }
    Ok(format!(
        "10000 counts; recall+fnr exact on {recall_checked}, specificity+fpr exact on {specificity_checked}, f1 bounded on {f1_checked}"
    ))
}

/// Imports the documents into a fresh store and returns the serialized
/// matrices together with the elapsed ingest time.
fn ingest_into_store(dir: &Path, gt: &str, docs: &[String]) -> Result<(Vec<String>, Duration), String> {
    let started = Instant::now();
    let mut store = Store::open(dir).map_err(|e| e.to_string())?;
    store.set_ground_truth(gt.as_bytes()).map_err(|e| e.to_string())?;
    for doc in docs {
        store.import_model(doc.as_bytes()).map_err(|e| e.to_string())?;
    }
    let matrices = MetricId::ALL
        .iter()
        .map(|&m| store.metric_matrix(m).map(|x| x.to_json()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok((matrices, started.elapsed()))
}

fn desk_scale_throughput() -> Outcome {
    let cfg = SyntheticConfig::uniform(9, 1000, 10_000, 42, 0.7);
    let documents = || {
        let b = generate_synthetic(&cfg).unwrap();
        let docs: Vec<String> = b.models().iter().map(|m| m.to_json()).collect();
        (b.ground_truth().to_json(), docs)
    };
    let (gt, docs) = documents();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (first, elapsed) = ingest_into_store(&tmp.path().join("a"), &gt, &docs)?;
    ensure!(
        elapsed < Duration::from_secs(10),
        "ingest + 7 matrices took {:.2}s",
        elapsed.as_secs_f64()
    );

    let (gt2, docs2) = documents();
    ensure!(gt == gt2 && docs == docs2, "regenerated documents differ");
    let (second, _) = ingest_into_store(&tmp.path().join("b"), &gt2, &docs2)?;
    ensure!(first == second, "matrices differ between runs");

    // The same matrices computed in-process without the store.
    let direct: Vec<String> = compute_all_matrices(&bundle_from_documents(&gt, &docs))
        .map_err(|e| e.to_string())?
        .iter()
        .map(MetricMatrix::to_json)
        .collect();
    ensure!(direct == first, "store matrices differ from direct computation");
    let bytes: usize = docs.iter().map(String::len).sum();
    Ok(format!(
        "9 x 1000 x 10000 ingested ({:.1} MB) with 7 matrices in {:.2}s (< 10s); rerun byte-identical",
        bytes as f64 / 1e6,
        elapsed.as_secs_f64()
    ))
}

fn rings_disjoint(scene: &circles_core::layout::LayoutScene) -> Result<(), String> {
    let Rings::Line(paths) = &scene.rings else {
        return Err("expected line rings".into());
    };
    let band = scene.config.band_width_px;
    let mut previous_max = f64::NEG_INFINITY;
    for path in paths {
        let base = ring_base_radius(path.ring_index, &scene.config);
        let (lo, hi) = path.knots.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
            (lo.min(k.radius), hi.max(k.radius))
        });
        ensure!(lo >= base && hi <= base + band, "ring {} knots [{lo}, {hi}] leave band", path.ring_index);
        ensure!(
            base > previous_max,
            "ring {} base {base} overlaps previous band ending at {previous_max}",
            path.ring_index
        );
        previous_max = base + band;
    }
    Ok(())
}

fn scale_claim() -> Outcome {
    let mut report = Vec::new();
    for models in [20, 9] {
        let bundle = generate_synthetic(&SyntheticConfig::uniform(models, 1000, 5000, 42, 0.7))
            .map_err(|e| e.to_string())?;
        let matrix = compute_metric_matrix(MetricId::Precision, &bundle).map_err(|e| e.to_string())?;
        let started = Instant::now();
        let scene = build_line_scene(&matrix, &ViewConfig::default()).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        ensure!(scene.ring_count() == models, "{} rings for {models} models", scene.ring_count());
        if models == 20 {
            ensure!(
                elapsed < Duration::from_secs(1),
                "20 x 1000 line scene took {:.3}s",
                elapsed.as_secs_f64()
            );
        }
        rings_disjoint(&scene)?;
        let svg = render_svg(&scene, &SvgStyle::default()).map_err(|e| e.to_string())?;
        ensure!(svg.matches("<path").count() == models, "svg paths for {models} models");
        report.push(format!("{models} rings disjoint (built in {:.3}s)", elapsed.as_secs_f64()));
    }
    Ok(report.join("; "))
}

fn geometry() -> Outcome {
    let n = 1000;
    let step = TAU / n as f64;
    let mut worst = 0.0f64;
    for c in 1..n {
        let gap = class_angle(c, n).unwrap() - class_angle(c - 1, n).unwrap();
        worst = worst.max((gap - step).abs());
    }
    let wrap = TAU - class_angle(n - 1, n).unwrap();
    worst = worst.max((wrap - step).abs());
    ensure!(worst <= 1e-12, "angular gap error {worst:e}");

    let cfg = ViewConfig::default();
    ensure!(cfg.band_width_px == 10.0, "default band is {}", cfg.band_width_px);
    for ring in 0..20 {
        let base = ring_base_radius(ring, &cfg);
        let full = value_radius(1.0, base, 10.0).unwrap() - base;
        let tenth = value_radius(0.1, base, 10.0).unwrap() - base;
        ensure!(full == 10.0, "ring {ring}: value 1.0 sits {full} px above base");
        ensure!(tenth == 1.0, "ring {ring}: value 0.1 sits {tenth} px above base");
    }
    Ok(format!("max gap error {worst:.1e} rad; 1.0 -> +10 px, 0.1 -> +1 px on 20 ring bases"))
}

fn spline_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_rel = 0.0f64;
    for set in 0..1000 {
        let count = rng.gen_range(3..60);
        let scale = 10f64.powi(rng.gen_range(-2..4));
        let knots: Vec<Point> = loop {
            let k: Vec<Point> = (0..count)
                .map(|_| [rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale])
                .collect();
            if (0..count).all(|i| k[i] != k[(i + 1) % count]) {
                break k;
            }
        };
        let samples = rng.gen_range(1..12);
        let curve = catmull_rom_closed(&knots, samples).map_err(|e| e.to_string())?;
        for (i, k) in knots.iter().enumerate() {
            let p = curve[i * samples];
            let rel = (p[0] - k[0]).hypot(p[1] - k[1]) / k[0].hypot(k[1]).max(f64::MIN_POSITIVE);
            worst_rel = worst_rel.max(rel);
            ensure!(rel <= 1e-9, "set {set} knot {i}: relative miss {rel:e}");
        }
    }

    let mut worst_overshoot = 0.0f64;
    let cfg = ViewConfig::default();
    let band = cfg.band_width_px;
    for trial in 0..60 {
        let n = [3, 4, 5, 8, 16, 64, 250, 1000][trial % 8];
        let models = rng.gen_range(1..=4);
        let values: Vec<Vec<f64>> = (0..models)
            .map(|_| {
                (0..n)
                    .map(|_| match rng.gen_range(0..3) {
                        0 => 0.0,
                        1 => 1.0,
                        _ => rng.gen_range(0.0..=1.0),
                    })
                    .collect()
            })
            .collect();
        let matrix = MetricMatrix {
            metric: MetricId::Recall,
            model_names: (0..models).map(|m| format!("m{m}")).collect(),
            class_count: n,
            degenerate: vec![vec![false; n]; models],
            values,
        };
        let scene = build_line_scene(&matrix, &cfg).map_err(|e| e.to_string())?;
        let Rings::Line(paths) = &scene.rings else { unreachable!() };
        for path in paths {
            let base = path.base_radius;
            for (i, k) in path.knots.iter().enumerate() {
                let p = path.polyline[i * cfg.samples_per_segment];
                let want = [k.radius * k.angle.sin(), -k.radius * k.angle.cos()];
                let rel = (p[0] - want[0]).hypot(p[1] - want[1]) / k.radius;
                ensure!(rel <= 1e-9, "ring knot miss {rel:e}");
            }
            for p in &path.polyline {
                let r = p[0].hypot(p[1]);
                let over = (base - r).max(r - base - band).max(0.0);
                worst_overshoot = worst_overshoot.max(over);
            }
        }
    }
    ensure!(
        worst_overshoot <= 0.25 * band,
        "overshoot {worst_overshoot:.3} px exceeds {} px",
        0.25 * band
    );
    Ok(format!(
        "1000 knot sets, worst relative knot miss {worst_rel:.1e}; worst band overshoot {worst_overshoot:.3} px (limit {:.1})",
        0.25 * band
    ))
}

fn svg_export() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut elements = 0;
    for i in 0..60 {
        let models = rng.gen_range(1..=6);
        let n = if i % 10 == 0 { 1000 } else { rng.gen_range(3..80) };
        let matrix = MetricMatrix {
            metric: MetricId::Specificity,
            model_names: (0..models).map(|m| format!("model <{m}> & \"co\"")).collect(),
            class_count: n,
            degenerate: vec![vec![false; n]; models],
            values: (0..models)
                .map(|_| (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect())
                .collect(),
        };
        let mode = if i % 2 == 0 { Mode::Line } else { Mode::Bar };
        let range = rng.gen_bool(0.5).then(|| {
            let a = rng.gen_range(0..n);
            (a, rng.gen_range(a..n))
        });
        let cfg = ViewConfig {
            mode,
            ring_spacing_px: rng.gen_range(10.0..=60.0),
            highlight_range: range,
            ..Default::default()
        };
        let scene = build_scene(&matrix, &cfg).map_err(|e| e.to_string())?;
        let style = SvgStyle::default();
        let svg = render_svg(&scene, &style).map_err(|e| e.to_string())?;
        ensure!(svg == render_svg(&scene, &style).unwrap(), "scene {i}: export not repeatable");
        let doc = roxmltree::Document::parse(&svg).map_err(|e| format!("scene {i}: {e}"))?;
        let paths = doc.descendants().filter(|n| n.has_tag_name("path")).count();
        let expected = match mode {
            Mode::Line => models,
            Mode::Bar => models * n,
        };
        ensure!(paths == expected, "scene {i} ({mode}): {paths} paths, expected {expected}");
        elements += paths;
    }
    let bars = build_bar_scene(
        &MetricMatrix {
            metric: MetricId::Recall,
            model_names: vec!["only".into()],
            class_count: 1000,
            values: vec![vec![0.5; 1000]],
            degenerate: vec![vec![false; 1000]],
        },
        &ViewConfig { mode: Mode::Bar, ..Default::default() },
    )
    .map_err(|e| e.to_string())?;
    let svg = render_svg(&bars, &SvgStyle::default()).map_err(|e| e.to_string())?;
    ensure!(svg.matches("class=\"sector\"").count() == 1000, "1-model bar scene sector count");
    Ok(format!("60 random scenes well-formed and repeatable, {elements} ring/sector elements matched"))
}

struct Server {
    addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Server {
    fn start(dir: &Path) -> Result<Self, String> {
        let store = Store::open(dir).map_err(|e| e.to_string())?;
        let shared = Arc::new(RwLock::new(store));
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let handle = thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, router(shared, None))
                    .with_graceful_shutdown(async {
                        let _ = stop_rx.await;
                    })
                    .await
                    .unwrap();
            });
        });
        let addr = addr_rx
            .recv_timeout(Duration::from_secs(10))
            .map_err(|e| e.to_string())?;
        Ok(Self {
            addr,
            shutdown: Some(stop_tx),
            handle: Some(handle),
        })
    }

    fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn snapshot(client: &reqwest::blocking::Client, server: &Server, queries: &[String]) -> Result<Vec<String>, String> {
    queries
        .iter()
        .map(|q| {
            let resp = client.get(server.url(q)).send().map_err(|e| e.to_string())?;
            ensure!(resp.status().is_success(), "GET {q} -> {}", resp.status());
            resp.text().map_err(|e| e.to_string())
        })
        .collect()
}

fn service_contract() -> Outcome {
    let bundle = generate_synthetic(&SyntheticConfig::uniform(3, 40, 400, 5, 0.6))
        .map_err(|e| e.to_string())?;
    let gt_doc = bundle.ground_truth().to_json();
    let docs: Vec<String> = bundle.models().iter().map(|m| m.to_json()).collect();
    let direct = bundle_from_documents(&gt_doc, &docs);

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store_dir = tmp.path().join("store");
    let client = reqwest::blocking::Client::new();
    let server = Server::start(&store_dir)?;

    let resp = client
        .put(server.url("/api/ground-truth"))
        .body(gt_doc.clone())
        .send()
        .map_err(|e| e.to_string())?;
    ensure!(resp.status() == 200, "PUT ground truth -> {}", resp.status());
    let mut ids = Vec::new();
    for doc in &docs {
        let resp = client.post(server.url("/api/models")).body(doc.clone()).send().map_err(|e| e.to_string())?;
        ensure!(resp.status() == 201, "POST model -> {}", resp.status());
        let body: serde_json::Value = resp.json().map_err(|e| e.to_string())?;
        ids.push(body["id"].as_str().unwrap().to_string());
    }

    // Idempotent re-import of reformatted content.
    let pretty = serde_json::to_string_pretty(&serde_json::from_str::<serde_json::Value>(&docs[1]).unwrap()).unwrap();
    let resp = client.post(server.url("/api/models")).body(pretty).send().map_err(|e| e.to_string())?;
    ensure!(resp.status() == 200, "re-import -> {}", resp.status());
    let body: serde_json::Value = resp.json().map_err(|e| e.to_string())?;
    ensure!(body["id"] == ids[1].as_str(), "re-import changed id");
    let list: serde_json::Value = client.get(server.url("/api/models")).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
    ensure!(list.as_array().map(Vec::len) == Some(3), "model list after re-import: {list}");

    // Responses equal direct in-process module calls.
    let mut queries = Vec::new();
    let mut expected = Vec::new();
    for metric in MetricId::ALL {
        let matrix = compute_metric_matrix(metric, &direct).map_err(|e| e.to_string())?;
        queries.push(format!("/api/metrics/{metric}"));
        expected.push(matrix.to_json());
        queries.push(format!("/api/metrics/{metric}/class/17"));
        expected.push(serde_json::to_string(&matrix.class_detail(17).unwrap()).unwrap());
        for (q, cfg) in [
            ("mode=line", ViewConfig::default()),
            (
                "mode=bar&spacing=10&range=5-30",
                ViewConfig {
                    mode: Mode::Bar,
                    ring_spacing_px: 10.0,
                    highlight_range: Some((5, 30)),
                    ..Default::default()
                },
            ),
        ] {
            let scene = build_scene(&matrix, &cfg).map_err(|e| e.to_string())?;
            queries.push(format!("/api/layout?metric={metric}&{q}"));
            expected.push(scene.to_json());
            queries.push(format!("/api/export.svg?metric={metric}&{q}"));
            expected.push(render_svg(&scene, &SvgStyle::default()).unwrap());
        }
    }
    let before = snapshot(&client, &server, &queries)?;
    for ((q, got), want) in queries.iter().zip(&before).zip(&expected) {
        ensure!(got == want, "GET {q} differs from in-process result");
    }

    // Restart on the same directory.
    drop(server);
    let server = Server::start(&store_dir)?;
    let after = snapshot(&client, &server, &queries)?;
    ensure!(before == after, "responses changed across restart");
    let list_after: serde_json::Value = client.get(server.url("/api/models")).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
    ensure!(list == list_after, "model list changed across restart");

    // Cache coherence after a delete.
    let resp = client.delete(server.url(&format!("/api/models/{}", ids[0]))).send().map_err(|e| e.to_string())?;
    ensure!(resp.status() == 204, "DELETE -> {}", resp.status());
    let m: serde_json::Value = client.get(server.url("/api/metrics/recall")).send().and_then(|r| r.json()).map_err(|e| e.to_string())?;
    ensure!(m["models"] == serde_json::json!(["model_01", "model_02"]), "matrix after delete: {}", m["models"]);

    let unknown = client.get(server.url("/api/metrics/gini")).send().map_err(|e| e.to_string())?;
    ensure!(unknown.status() == 404, "unknown metric -> {}", unknown.status());
    Ok(format!(
        "{} HTTP responses byte-identical to in-process calls and across restart; re-import idempotent",
        queries.len()
    ))
}
