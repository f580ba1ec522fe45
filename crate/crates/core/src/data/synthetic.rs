//! Seeded generator of weekly price/volume records with the same schema as
//! the real data: organic above conventional, a yearly cycle, a mild
//! upward trend, and volumes that fall when prices rise.

use std::f64::consts::TAU;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::record::{AvocadoType, RawRecord, RecordTable};

const REGION_NAMES: [&str; 16] = [
    "Albany", "Atlanta", "Boston", "Chicago", "Denver", "Houston", "LosAngeles", "Miami",
    "Nashville", "NewYork", "Phoenix", "Portland", "SanDiego", "Seattle", "Spokane", "Tampa",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub start: NaiveDate,
    pub conventional_base: f64,
    pub organic_premium: f64,
    /// Price increase per week.
    pub trend: f64,
    pub seasonal_amplitude: f64,
    pub period_weeks: f64,
    /// AR(1) coefficient of the price noise.
    pub noise_ar: f64,
    pub noise_std: f64,
    /// Log-volume change per unit of price above the series mean.
    pub price_elasticity: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2015, 1, 4).expect("valid date"),
            conventional_base: 1.15,
            organic_premium: 0.5,
            trend: 0.0015,
            seasonal_amplitude: 0.18,
            period_weeks: 52.0,
            noise_ar: 0.7,
            noise_std: 0.04,
            price_elasticity: 1.5,
        }
    }
}

pub fn region_name(i: usize) -> String {
    match REGION_NAMES.get(i) {
        Some(n) => n.to_string(),
        None => format!("Region{:03}", i),
    }
}

/// `num_regions × 2` weekly series of `weeks` rows each, with the default
/// shape parameters.
pub fn gen_synthetic(num_regions: usize, weeks: usize, seed: u64) -> RecordTable {
    generate(&SyntheticConfig::default(), num_regions, weeks, seed)
}

pub fn generate(cfg: &SyntheticConfig, num_regions: usize, weeks: usize, seed: u64) -> RecordTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let common_phase = rng.random_range(0.0..TAU);
    let mut records = Vec::with_capacity(num_regions * 2 * weeks);

    for r in 0..num_regions {
        let region = region_name(r);
        let region_offset = rng.random_range(-0.1..0.1);
        let region_phase = common_phase + rng.random_range(-0.3..0.3);
        let weather_phase = rng.random_range(0.0..TAU);
        let base_volume = rng.random_range(5.0e4..5.0e5);
        let mut weather: Vec<f64> = Vec::with_capacity(weeks);
        for t in 0..weeks {
            let w = 0.5 + 0.35 * (TAU * t as f64 / cfg.period_weeks + weather_phase).sin()
                + 0.05 * unit.sample(&mut rng);
            weather.push(w.clamp(0.0, 1.0));
        }

        for kind in [AvocadoType::Conventional, AvocadoType::Organic] {
            let (base, volume_scale) = match kind {
                AvocadoType::Conventional => (cfg.conventional_base, 1.0),
                AvocadoType::Organic => (cfg.conventional_base + cfg.organic_premium, 0.04),
            };
            let base = base + region_offset;
            let mut noise = 0.0;
            let mut prices = Vec::with_capacity(weeks);
            for (t, &w) in weather.iter().enumerate() {
                noise = cfg.noise_ar * noise + cfg.noise_std * unit.sample(&mut rng);
                let seasonal =
                    cfg.seasonal_amplitude * (TAU * t as f64 / cfg.period_weeks + region_phase).sin();
                let p = base + cfg.trend * t as f64 + seasonal - 0.05 * (w - 0.5) + noise;
                prices.push(p.max(0.2));
            }
            let mean_price = prices.iter().sum::<f64>() / prices.len().max(1) as f64;

            for (t, (&price, &w)) in prices.iter().zip(&weather).enumerate() {
                let date = cfg.start + Duration::weeks(t as i64);
                let log_noise = 0.05 * unit.sample(&mut rng);
                let volume = base_volume
                    * volume_scale
                    * (-cfg.price_elasticity * (price - mean_price) + log_noise).exp();
                let mut share = |mean: f64| volume * (mean + 0.01 * unit.sample(&mut rng)).max(0.001);
                let plu4046 = share(0.35);
                let plu4225 = share(0.40);
                let plu4770 = share(0.03);
                records.push(RawRecord {
                    date,
                    average_price: round_to(price, 4),
                    kind,
                    year: date.year(),
                    region: region.clone(),
                    plu4046: round_to(plu4046, 2),
                    plu4225: round_to(plu4225, 2),
                    plu4770: round_to(plu4770, 2),
                    sales_volume: round_to(volume, 2),
                    weather: round_to(w, 4),
                });
            }
        }
    }
    RecordTable::new(records)
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}
