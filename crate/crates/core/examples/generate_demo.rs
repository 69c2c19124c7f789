//! Regenerates the bundled demo dataset at `data/demo_sales.csv`.
//!
//! 10,000 order lines over 60 months with four categorical dimensions and
//! two measures. Planted patterns: an upward trend, a 12-month seasonal
//! cycle, a level shift in the west from 2022-01, a spike in the east in
//! 2023-03, and units that track revenue.
//!
//! ```text
//! cargo run -p storyline --example generate_demo [-- <output.csv>]
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROWS: usize = 10_000;
const MONTHS: usize = 60;
const REGIONS: &[(&str, f64)] = &[
    ("central", 0.8),
    ("east", 1.2),
    ("north", 1.0),
    ("south", 0.9),
    ("west", 1.1),
];
const PRODUCTS: &[(&str, f64)] = &[
    ("binders", 12.0),
    ("chairs", 180.0),
    ("desks", 420.0),
    ("lamps", 45.0),
    ("monitors", 260.0),
    ("stationery", 8.0),
    ("phones", 310.0),
    ("storage", 95.0),
];
const CHANNELS: &[(&str, f64)] = &[("online", 0.5), ("partner", 0.2), ("retail", 0.3)];
const SEGMENTS: &[&str] = &["consumer", "corporate", "government", "small_business"];

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, items: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut x = rng.random_range(0.0..total);
    for (name, w) in items {
        if x < *w {
            return name;
        }
        x -= w;
    }
    items[items.len() - 1].0
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo_sales.csv"));
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record([
        "order_month",
        "region",
        "product",
        "channel",
        "segment",
        "revenue",
        "units",
    ])?;
    for _ in 0..ROWS {
        let m = rng.random_range(0..MONTHS);
        let (region, region_scale) = REGIONS[rng.random_range(0..REGIONS.len())];
        let (product, price) = PRODUCTS[rng.random_range(0..PRODUCTS.len())];
        let channel = pick_weighted(&mut rng, CHANNELS);
        let segment = SEGMENTS[rng.random_range(0..SEGMENTS.len())];

        let trend = 1.0 + 0.012 * m as f64;
        let season = 1.0 + 0.3 * (2.0 * PI * m as f64 / 12.0).sin();
        let step = if region == "west" && m >= 36 {
            1.8
        } else {
            1.0
        };
        let spike = if region == "east" && m == 50 {
            6.0
        } else {
            1.0
        };
        let units = (rng.random_range(2.0..12.0) * trend * season * step * spike * region_scale)
            .round()
            .max(1.0);
        let revenue = units * price * rng.random_range(0.85..1.15);

        let month = format!("{}-{:02}-01", 2019 + m / 12, m % 12 + 1);
        w.write_record([
            month.as_str(),
            region,
            product,
            channel,
            segment,
            &format!("{revenue:.2}"),
            &format!("{units}"),
        ])?;
    }
    w.flush()?;
    println!("wrote {ROWS} rows to {}", out.display());
    Ok(())
}
