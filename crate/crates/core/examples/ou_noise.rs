//! Discrete OU process statistics against the analytic stationary values.
use auv_depth::noise::{OuParams, OuProcess};

fn main() -> auv_depth::Result<()> {
    let p = OuParams::default();
    let mut ou = OuProcess::new(p.clone(), 42)?;
    let n = 200_000;
    let xs: Vec<f64> = (0..n).map(|_| ou.step()[0]).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let lag1 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1) as f64 / var;
    println!("beta {}  sigma {}", p.beta, p.sigma);
    println!("stationary std: empirical {:.4}  analytic {:.4}", var.sqrt(), p.stationary_std());
    println!("lag-1 autocorrelation: empirical {lag1:.4}  analytic {:.4}", 1.0 - p.beta);
    Ok(())
}
