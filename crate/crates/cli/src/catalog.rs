//! Named functions usable as `--f <name>`.

use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use cconvex::Interval;

pub type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const NAMES: &str = "parabola, square, abs, neg_parabola, neg_square, neg_abs, zero, constant:k, pwl:x0,v0;x1,v1;..";

#[derive(Clone)]
pub struct CatalogFn {
    pub name: String,
    pub eval: Eval,
    /// Knot range for piecewise-linear entries; the others are defined
    /// everywhere.
    support: Option<(f64, f64)>,
}

impl CatalogFn {
    fn total(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_string(),
            eval: Arc::new(f),
            support: None,
        }
    }

    pub fn check_domain(&self, interval: &Interval) -> Result<()> {
        if let Some((lo, hi)) = self.support {
            if interval.lo() < lo || interval.hi() > hi {
                bail!(
                    "{} is defined on [{lo}, {hi}] but I = [{}, {}]",
                    self.name,
                    interval.lo(),
                    interval.hi()
                );
            }
        }
        Ok(())
    }
}

fn num(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        bail!("expected a finite number, got {s:?}");
    }
    Ok(v)
}

fn piecewise_linear(spec: &str) -> Result<CatalogFn> {
    let knots = spec
        .split(';')
        .map(|k| {
            let (x, v) = k.split_once(',').ok_or_else(|| anyhow!("knot {k:?} is not of the form x,v"))?;
            Ok((num(x)?, num(v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if knots.len() < 2 {
        bail!("pwl needs at least 2 knots");
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        bail!("pwl knots must have strictly increasing x");
    }
    let support = (knots[0].0, knots[knots.len() - 1].0);
    let eval = move |x: f64| {
        let k = knots.partition_point(|&(kx, _)| kx <= x).clamp(1, knots.len() - 1);
        let ((x0, v0), (x1, v1)) = (knots[k - 1], knots[k]);
        v0 + (x - x0) * (v1 - v0) / (x1 - x0)
    };
    Ok(CatalogFn {
        name: format!("pwl:{spec}"),
        eval: Arc::new(eval),
        support: Some(support),
    })
}

pub fn lookup(name: &str) -> Result<CatalogFn> {
    let f = match name {
        "parabola" => CatalogFn::total(name, |x| 0.5 * x * x),
        "square" => CatalogFn::total(name, |x| x * x),
        "abs" => CatalogFn::total(name, f64::abs),
        "neg_parabola" => CatalogFn::total(name, |x| -0.5 * x * x),
        "neg_square" => CatalogFn::total(name, |x| -x * x),
        "neg_abs" => CatalogFn::total(name, |x| -x.abs()),
        "zero" => CatalogFn::total(name, |_| 0.0),
        _ => {
            if let Some(k) = name.strip_prefix("constant:") {
                let k = num(k)?;
                CatalogFn::total(name, move |_| k)
            } else if let Some(spec) = name.strip_prefix("pwl:") {
                piecewise_linear(spec)?
            } else {
                bail!("unknown function {name:?}; expected one of {NAMES} or csv:PATH");
            }
        }
    };
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries() {
        assert_eq!((lookup("parabola").unwrap().eval)(2.0), 2.0);
        assert_eq!((lookup("square").unwrap().eval)(-3.0), 9.0);
        assert_eq!((lookup("neg_abs").unwrap().eval)(-3.0), -3.0);
        assert_eq!((lookup("constant:2.5").unwrap().eval)(7.0), 2.5);
        assert!(lookup("constant:x").is_err());
        assert!(lookup("cubic").is_err());
    }

    #[test]
    fn pwl() {
        let f = lookup("pwl:-1,1;0,0;2,4").unwrap();
        assert_eq!((f.eval)(-1.0), 1.0);
        assert_eq!((f.eval)(-0.5), 0.5);
        assert_eq!((f.eval)(0.0), 0.0);
        assert_eq!((f.eval)(1.0), 2.0);
        assert_eq!((f.eval)(2.0), 4.0);
        assert!(f.check_domain(&Interval::new(-1.0, 2.0).unwrap()).is_ok());
        assert!(f.check_domain(&Interval::new(-2.0, 2.0).unwrap()).is_err());
        assert!(lookup("pwl:0,1").is_err());
        assert!(lookup("pwl:1,0;0,1").is_err());
    }
}
