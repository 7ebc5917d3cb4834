use std::fmt;

use super::HarnessError;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability of Student's t with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    pub p: f64,
}

/// Mean and unbiased sample variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Two-sided Welch's t-test of equal means.
pub fn welch_t_test(xs: &[f64], ys: &[f64]) -> Result<WelchResult, HarnessError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(HarnessError::Stats("each sample needs at least two values".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(HarnessError::Stats("samples must be finite".into()));
    }
    let (mx, vx) = mean_var(xs);
    let (my, vy) = mean_var(ys);
    let (sx, sy) = (vx / xs.len() as f64, vy / ys.len() as f64);
    let se2 = sx + sy;
    if se2 <= 0.0 {
        return Err(HarnessError::Stats("both samples have zero variance".into()));
    }
    let t = (mx - my) / se2.sqrt();
    let dof = se2 * se2 / (sx * sx / (xs.len() - 1) as f64 + sy * sy / (ys.len() - 1) as f64);
    Ok(WelchResult { t, dof, p: student_t_two_sided(t, dof) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl SampleStats {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, var) = mean_var(xs);
        SampleStats { mean, std: var.sqrt(), n: xs.len() }
    }
}

impl fmt::Display for SampleStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}±{:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub metric: String,
    pub a: SampleStats,
    pub b: SampleStats,
    pub welch: WelchResult,
}

impl SummaryStats {
    pub fn from_samples(metric: &str, xs: &[f64], ys: &[f64]) -> Result<Self, HarnessError> {
        let welch = welch_t_test(xs, ys)?;
        Ok(SummaryStats { metric: metric.to_string(), a: SampleStats::of(xs), b: SampleStats::of(ys), welch })
    }

    pub fn csv_header() -> &'static str {
        "metric,mean_a,std_a,n_a,mean_b,std_b,n_b,t,dof,p"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.metric, self.a.mean, self.a.std, self.a.n, self.b.mean, self.b.std, self.b.n, self.welch.t, self.welch.dof,
            self.welch.p
        )
    }

    /// Aligned two-line table.
    pub fn table(&self) -> String {
        let a = self.a.to_string();
        let b = self.b.to_string();
        let w = a.len().max(b.len()).max(6);
        format!(
            "{:<20} {:>w$} {:>w$} {:>10} {:>8} {:>10}\n{:<20} {:>w$} {:>w$} {:>10.4} {:>8.2} {:>10.3e}\n",
            "metric", "A", "B", "t", "dof", "p", self.metric, a, b, self.welch.t, self.welch.dof, self.welch.p
        )
    }
}
