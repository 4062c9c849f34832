//! Signal spec strings for `--spec`.
//!
//! Components are joined with `+`; each is `kind[:args]` where args are
//! separated by `:` or `,`, positional or `key=value`:
//!
//! - `tone:0.5pi`
//! - `chirp:0.1pi:0.9pi` (start, end)
//! - `impulse:10`
//! - `pulse:center=64,spread=8,omega=pi/2`
//! - `noise:seed=7` (real white noise)
//! - `band:seed=3,lo=pi/4,hi=3pi/4`
//!
//! Frequencies are in rad/sample and accept `pi` forms such as `3pi/4`.

use std::f64::consts::PI;

use ktfr::{SignalKind, SignalSpec};

/// `1.5`, `pi`, `0.5pi`, `pi/4`, `3pi/4`, `-pi/8`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let err = || format!("cannot parse number {s:?}");
    if let Some((coef, rest)) = s.split_once("pi") {
        let c = match coef.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.trim_end_matches('*').parse::<f64>().map_err(|_| err())?,
        };
        let d = match rest.trim() {
            "" => 1.0,
            r => r.strip_prefix('/').ok_or_else(err)?.parse::<f64>().map_err(|_| err())?,
        };
        Ok(c * PI / d)
    } else {
        s.parse().map_err(|_| err())
    }
}

struct Args<'a> {
    kind: &'a str,
    positional: Vec<&'a str>,
    named: Vec<(&'a str, &'a str)>,
}

impl Args<'_> {
    fn value(&self, name: &str, pos: usize) -> Option<&str> {
        self.named.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).or_else(|| self.positional.get(pos).copied())
    }

    fn num(&self, name: &str, pos: usize, default: Option<f64>) -> Result<f64, String> {
        match self.value(name, pos) {
            Some(v) => parse_number(v),
            None => default.ok_or(format!("{}: missing {name}", self.kind)),
        }
    }

    fn check_names(&self, allowed: &[&str]) -> Result<(), String> {
        match self.named.iter().find(|(k, _)| !allowed.contains(k)) {
            Some((k, _)) => Err(format!("{}: unknown argument {k:?}", self.kind)),
            None => Ok(()),
        }
    }
}

fn component(text: &str, len: usize) -> Result<SignalKind, String> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut args = Args { kind: kind.trim(), positional: vec![], named: vec![] };
    for a in rest.split([':', ',']).map(str::trim).filter(|a| !a.is_empty()) {
        match a.split_once('=') {
            Some((k, v)) => args.named.push((k.trim(), v.trim())),
            None => args.positional.push(a),
        }
    }
    let seed = |a: &Args| -> Result<u64, String> {
        a.value("seed", 0).unwrap_or("0").parse().map_err(|e| format!("{}: seed: {e}", a.kind))
    };
    let kind = match args.kind {
        "tone" => {
            args.check_names(&["omega"])?;
            SignalKind::Tone { omega: args.num("omega", 0, None)? }
        }
        "chirp" => {
            args.check_names(&["start", "end"])?;
            SignalKind::LinearChirp { start: args.num("start", 0, None)?, end: args.num("end", 1, None)? }
        }
        "impulse" => {
            args.check_names(&["n0"])?;
            let n0 = args.num("n0", 0, Some(len as f64 / 2.0))?;
            if n0 < 0.0 || n0.fract() != 0.0 {
                return Err(format!("impulse: n0 must be a nonnegative integer, got {n0}"));
            }
            SignalKind::Impulse { n0: n0 as usize }
        }
        "pulse" => {
            args.check_names(&["center", "spread", "omega"])?;
            SignalKind::GaussianPulse {
                center: args.num("center", 0, Some(len as f64 / 2.0))?,
                spread: args.num("spread", 1, Some(len as f64 / 16.0))?,
                omega: args.num("omega", 2, Some(PI / 2.0))?,
            }
        }
        "noise" => {
            args.check_names(&["seed"])?;
            SignalKind::WhiteNoise { seed: seed(&args)? }
        }
        "band" => {
            args.check_names(&["seed", "lo", "hi"])?;
            SignalKind::BandNoise {
                seed: seed(&args)?,
                lo: args.num("lo", 1, Some(PI / 4.0))?,
                hi: args.num("hi", 2, Some(3.0 * PI / 4.0))?,
            }
        }
        other => return Err(format!("unknown signal kind {other:?}")),
    };
    Ok(kind)
}

pub fn parse_spec(text: &str, len: usize) -> Result<SignalSpec, String> {
    let parts: Vec<SignalKind> = text.split('+').map(|c| component(c.trim(), len)).collect::<Result<_, _>>()?;
    let kind = if parts.len() == 1 { parts.into_iter().next().unwrap() } else { SignalKind::Sum(parts) };
    Ok(SignalSpec::new(kind, len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_number("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_number("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_number("-pi").unwrap(), -PI);
        assert_eq!(parse_number("1e-2").unwrap(), 0.01);
        assert!(parse_number("pie").is_err());
    }

    #[test]
    fn specs() {
        assert_eq!(parse_spec("tone:0.5pi", 8).unwrap().kind, SignalKind::Tone { omega: PI / 2.0 });
        assert_eq!(parse_spec("noise:seed=7", 8).unwrap().kind, SignalKind::WhiteNoise { seed: 7 });
        assert_eq!(parse_spec("noise:7", 8).unwrap().kind, SignalKind::WhiteNoise { seed: 7 });
        let s = parse_spec("tone:1 + chirp:0.1:end=2", 8).unwrap();
        assert_eq!(
            s.kind,
            SignalKind::Sum(vec![SignalKind::Tone { omega: 1.0 }, SignalKind::LinearChirp { start: 0.1, end: 2.0 }])
        );
        assert!(parse_spec("tone", 8).is_err());
        assert!(parse_spec("saw:1", 8).is_err());
        assert!(parse_spec("tone:omega=1,x=2", 8).is_err());
    }
}
