//! Number formatting, run manifests and CSV emission.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::lp::{SweepEntry, TradeoffPoint};

/// Formats like C's `%.9g`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Provenance block written at the top of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_path: String,
    pub command: String,
    pub parameters: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    /// Timestamp comes from `SOURCE_DATE_EPOCH` when set, else the clock.
    pub fn new(command: &str, config_path: &str) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            config_path: config_path.into(),
            command: command.into(),
            parameters: Vec::new(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
        }
    }

    pub fn with_timestamp(mut self, timestamp: u64) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    /// `# key: value` lines.
    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# qsched {}", self.version);
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# config: {}", self.config_path);
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "# {k}: {v}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        let _ = writeln!(s, "# timestamp: {}", self.timestamp);
        s
    }
}

/// Tradeoff curve as CSV; infeasible budgets are listed as comments.
pub fn sweep_csv(manifest: &RunManifest, states: usize, entries: &[SweepEntry]) -> String {
    let mut out = manifest.header();
    let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut head = vec!["budget".to_string(), "power_used".into(), "delay".into()];
    head.extend((1..=states).map(|w| format!("K_{w}")));
    head.extend((1..=states).map(|w| format!("frac_{w}")));
    wtr.write_record(&head).expect("in-memory write");
    let mut skipped = Vec::new();
    for e in entries {
        match e {
            SweepEntry::Point(p) => wtr.write_record(row(p)).expect("in-memory write"),
            SweepEntry::Infeasible { budget } => skipped.push(format!("# infeasible budget: {}", sig9(*budget))),
            SweepEntry::Unstructured { budget, error } => {
                skipped.push(format!("# budget {}: {error}", sig9(*budget)))
            }
        }
    }
    for line in skipped {
        let _ = writeln!(out, "{line}");
    }
    out.push_str(&String::from_utf8(wtr.into_inner().expect("flush")).expect("utf8"));
    out
}

fn row(p: &TradeoffPoint) -> Vec<String> {
    let mut r = vec![sig9(p.budget), sig9(p.power), sig9(p.delay)];
    r.extend(p.thresholds.thresholds.iter().map(|t| t.to_string()));
    r.extend(p.thresholds.frac.iter().map(|f| sig9(*f)));
    r
}

/// Gnuplot script drawing delay against power from `csv_path`.
pub fn gnuplot_script(csv_path: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key off\n\
         set title '{title}'\n\
         set xlabel 'average power'\n\
         set ylabel 'average delay (slots)'\n\
         set grid\n\
         plot '{csv_path}' using 2:3 skip 1 with linespoints\n"
    )
}
