#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use storyline_server::{serve_on, AppState, ServiceConfig};

pub fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/demo_sales.json")
}

/// A small deterministic sales table: 3 regions x 3 products over 24
/// months, with a planted jump for the west region in the last year.
pub fn write_small_dataset(dir: &Path) -> PathBuf {
    let mut csv = String::from("month,region,product,sales,units\n");
    let regions = ["east", "north", "west"];
    let products = ["desk", "lamp", "chair"];
    for m in 0..24 {
        let date = format!("{}-{:02}-01", 2022 + m / 12, m % 12 + 1);
        for (ri, r) in regions.iter().enumerate() {
            for (pi, p) in products.iter().enumerate() {
                let base = 100.0 + 20.0 * ri as f64 + 7.0 * pi as f64 + 3.0 * m as f64;
                let wiggle = ((m * 7 + ri * 3 + pi) % 5) as f64;
                let lift = if *r == "west" && m >= 12 { 1.8 } else { 1.0 };
                let sales = (base + wiggle) * lift;
                let units = 3 + (m + ri + pi) % 6;
                writeln!(csv, "{date},{r},{p},{sales:.2},{units}").unwrap();
            }
        }
    }
    let data = dir.join("small.csv");
    std::fs::write(&data, csv).unwrap();
    let config = serde_json::json!({
        "name": "small",
        "source": data,
        "column_kinds": { "month": "time" },
        "time_format": "%Y-%m-%d",
        "indicators": [{ "column": "sales", "aggregation": "sum" }],
        "top_k": 10
    });
    let path = dir.join("small.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

pub fn service_config(root: &Path) -> ServiceConfig {
    ServiceConfig {
        bind: "127.0.0.1:0".into(),
        registry_dir: root.join("registry"),
        session_dir: root.join("sessions"),
        ..ServiceConfig::default()
    }
}

/// Serves `state` on an ephemeral port and returns its base URL.
pub async fn spawn(state: AppState) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let state = Arc::new(state);
    tokio::spawn(async move {
        serve_on(listener, state).await.unwrap();
    });
    format!("http://{addr}")
}
