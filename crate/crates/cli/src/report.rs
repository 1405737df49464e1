//! Flat `key: value` run report.

use std::fmt;
use std::time::Duration;

use hvl_core::image::Metrics;
use hvl_core::render::StageTimings;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scene: String,
    pub mode: &'static str,
    pub width: usize,
    pub height: usize,
    pub hvl_requested: usize,
    /// Virtual lights actually placed, over all spot lights.
    pub hvl_count: usize,
    pub bands_emission: usize,
    pub bands_gather: usize,
    pub radius: String,
    pub k: f64,
    pub seed: u64,
    pub threads: usize,
    pub timings: StageTimings,
    pub metrics: Option<Metrics>,
    pub warnings: usize,
}

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.timings;
        writeln!(f, "scene: {}", self.scene)?;
        writeln!(f, "mode: {}", self.mode)?;
        writeln!(f, "width: {}", self.width)?;
        writeln!(f, "height: {}", self.height)?;
        writeln!(f, "hvl_requested: {}", self.hvl_requested)?;
        writeln!(f, "hvl_count: {}", self.hvl_count)?;
        writeln!(f, "bands_emission: {}", self.bands_emission)?;
        writeln!(f, "bands_gather: {}", self.bands_gather)?;
        writeln!(f, "radius: {}", self.radius)?;
        writeln!(f, "k: {}", self.k)?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "threads: {}", self.threads)?;
        writeln!(f, "time_rsm_ms: {}", ms(t.rsm))?;
        writeln!(f, "time_distribute_ms: {}", ms(t.distribute))?;
        writeln!(f, "time_tables_ms: {}", ms(t.tables))?;
        writeln!(f, "time_direct_ms: {}", ms(t.direct))?;
        writeln!(f, "time_indirect_ms: {}", ms(t.indirect))?;
        writeln!(f, "time_total_ms: {}", ms(t.total))?;
        match &self.metrics {
            Some(m) => {
                writeln!(f, "rmse: {:.6}", m.rmse)?;
                writeln!(f, "psnr_db: {:.3}", m.psnr)?;
                writeln!(f, "ssim: {:.6}", m.ssim)?;
            }
            None => {
                writeln!(f, "rmse: none")?;
                writeln!(f, "psnr_db: none")?;
                writeln!(f, "ssim: none")?;
            }
        }
        writeln!(f, "warnings: {}", self.warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Parses a report back into `(key, value)` pairs in order.
    fn parse(text: &str) -> Vec<(String, String)> {
        text.lines()
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn sample() -> RunReport {
        RunReport {
            scene: "cornell".into(),
            mode: "hvl",
            width: 4,
            height: 3,
            hvl_requested: 400,
            hvl_count: 400,
            bands_emission: 3,
            bands_gather: 5,
            radius: "r2".into(),
            k: 1.0,
            seed: 0,
            threads: 1,
            timings: StageTimings {
                rsm: Duration::from_micros(1500),
                indirect: Duration::from_millis(20),
                total: Duration::from_millis(23),
                ..Default::default()
            },
            metrics: None,
            warnings: 0,
        }
    }

    #[test]
    fn keys_are_stable_and_unique() {
        let text = sample().to_string();
        let pairs = parse(&text);
        assert_eq!(pairs.len(), text.lines().count());
        let mut keys: Vec<_> = pairs.iter().map(|(k, _)| k.clone()).collect();
        assert_eq!(keys[0], "scene");
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), pairs.len());
        assert!(text.contains("time_rsm_ms: 1.500\n"));
        assert!(text.contains("rmse: none\n"));
    }

    #[test]
    fn metrics_are_printed() {
        let r = RunReport { metrics: Some(Metrics { rmse: 0.125, psnr: 18.06, ssim: 0.9 }), ..sample() };
        let pairs = parse(&r.to_string());
        assert!(pairs.contains(&("rmse".into(), "0.125000".into())));
        assert!(pairs.contains(&("ssim".into(), "0.900000".into())));
    }
}
