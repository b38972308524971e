//! Command-line front end.
//!
//! Correlator expressions follow
//!
//! ```text
//! expr   ::= '<' factor (SP factor)* '>' '_' ('g=')? INT
//! factor ::= 'kappa1' ('^' INT)? | 'tau' INT ('^' INT)?
//! ```
//!
//! so both `<kappa1^2 tau0 tau0>_g=1` and the canonical printed form
//! `<kappa1^2 tau0^2>_1` are accepted.

use std::io::Write;
use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::correlator::{CorrelatorKey, KeyError};
use crate::engine::{Engine, EngineError};
use crate::verify::{dvv_suite, kappa_suite, kernel_suite, string_dilaton_suite, SuiteReport};
use crate::volumes::{generating_function_coeffs, volume_polynomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown class {name:?} at byte {offset} (only kappa1 and tau<k> are supported)")]
    UnknownClass { offset: usize, name: String },
    #[error(transparent)]
    Key(#[from] KeyError),
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.as_bytes().get(self.pos).copied()
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.syntax(format!("expected '{}'", c as char))
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
        self.pos > start
    }

    fn int(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.syntax("expected an integer");
        }
        self.text[start..self.pos].parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: "integer out of range".into(),
        })
    }

    fn word(&mut self) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(b'a'..=b'z' | b'A'..=b'Z')) {
            self.pos += 1;
        }
        &self.text[start..self.pos]
    }

    fn power(&mut self) -> Result<u32, ParseError> {
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.int()
        } else {
            Ok(1)
        }
    }
}

/// Parses a correlator expression into its canonical key.
pub fn parse_correlator(text: &str) -> Result<CorrelatorKey, ParseError> {
    let mut cur = Cursor { text, pos: 0 };
    cur.skip_ws();
    cur.expect(b'<')?;
    let mut k0 = 0u32;
    let mut ks = Vec::new();
    loop {
        let start = cur.pos;
        let name = cur.word();
        match name {
            "kappa" => {
                let idx_at = cur.pos;
                let idx = cur.int()?;
                if idx != 1 {
                    return Err(ParseError::UnknownClass {
                        offset: start,
                        name: format!("kappa{idx}"),
                    });
                }
                let _ = idx_at;
                k0 += cur.power()?;
            }
            "tau" => {
                let k = cur.int()?;
                let m = cur.power()?;
                ks.extend(std::iter::repeat_n(k, m as usize));
            }
            "" => return cur.syntax("expected a factor (kappa1 or tau<k>)"),
            other => {
                // swallow a trailing index so the whole token is reported
                while matches!(cur.peek(), Some(b'0'..=b'9')) {
                    cur.pos += 1;
                }
                return Err(ParseError::UnknownClass {
                    offset: start,
                    name: format!("{other}{}", &text[start + other.len()..cur.pos]),
                });
            }
        }
        let spaced = cur.skip_ws();
        if cur.peek() == Some(b'>') {
            cur.pos += 1;
            break;
        }
        if !spaced {
            return cur.syntax("expected ' ' or '>'");
        }
    }
    cur.expect(b'_')?;
    cur.eat("g=");
    let g = cur.int()?;
    cur.skip_ws();
    if cur.pos != text.len() {
        return cur.syntax("unexpected trailing input");
    }
    Ok(CorrelatorKey::new(g, k0, ks)?)
}

#[derive(Debug, Parser)]
#[command(
    name = "mgn",
    about = "Exact psi/kappa1 intersection numbers on moduli spaces of curves"
)]
pub struct Cli {
    /// Memo cache file, loaded before and saved after the command.
    #[arg(long, global = true, env = "MGN_CACHE")]
    pub cache_file: Option<PathBuf>,
    /// Maximum number of cached correlators (LRU eviction); unbounded if absent.
    #[arg(long, global = true)]
    pub cache_cap: Option<NonZeroUsize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Dvv,
    Kappa,
    Kernel,
    StringDilaton,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one correlator, e.g. "<kappa1^2 tau0 tau0>_g=1".
    Eval {
        expr: String,
        /// Also print the recursion terms.
        #[arg(long)]
        breakdown: bool,
    },
    /// Every dimension-matching correlator within the bounds.
    Table {
        #[arg(long)]
        max_dim: u32,
        #[arg(long)]
        gmax: Option<u32>,
        #[arg(long)]
        nmax: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
    },
    /// Weil-Petersson volume polynomial V_{g,n}(L).
    Volume {
        #[arg(long)]
        genus: u32,
        #[arg(long)]
        npoints: usize,
        /// Evaluate at these boundary lengths instead of printing the polynomial.
        #[arg(long, value_delimiter = ',')]
        at: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Cross-check the engine against independent oracles.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Coefficients of the generating function G(s, t0, t1, ...).
    Gf {
        #[arg(long)]
        gmax: u32,
        #[arg(long)]
        dim_max: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
}

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// A verification suite reported a failure.
pub const EXIT_VERIFY_FAILED: i32 = 1;
/// Usage, parse, or input error.
pub const EXIT_USAGE: i32 = 2;

#[derive(Serialize)]
struct TableRow {
    g: u32,
    k0: u32,
    ks: Vec<u32>,
    value: String,
}

fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Runs the CLI on `args` (including the program name), writing results to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Volume(#[from] crate::volumes::VolumeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let engine = Engine::with_cache_cap(cli.cache_cap);
    if let Some(path) = &cli.cache_file {
        if path.exists() {
            let n = engine.load_cache(path)?;
            writeln!(err, "loaded {n} cached correlators from {}", path.display())?;
        }
    }

    let code = match &cli.command {
        Command::Eval { expr, breakdown } => {
            let key = parse_correlator(expr)?;
            let value = engine.intersection_number(&key);
            writeln!(out, "{value}")?;
            if *breakdown {
                match engine.recursion_terms(&key) {
                    Ok(b) => {
                        writeln!(out, "(2*{}+1)!! = {}", b.slot_exponent, b.lhs_factor)?;
                        for (label, v) in &b.boundary_terms {
                            writeln!(out, "  {label}: {v}")?;
                        }
                        writeln!(out, "  total: {}", b.total())?;
                    }
                    Err(e) => writeln!(err, "no breakdown: {e}")?,
                }
            }
            EXIT_OK
        }
        Command::Table {
            max_dim,
            gmax,
            nmax,
            format,
        } => {
            let gmax = gmax.unwrap_or(max_dim / 3 + 1);
            let nmax = nmax.unwrap_or(max_dim + 3);
            let table = engine.compute_table(*max_dim, gmax, nmax)?;
            match format {
                TableFormat::Json => {
                    let rows: Vec<TableRow> = table
                        .iter()
                        .map(|(k, v)| TableRow {
                            g: k.genus(),
                            k0: k.kappa_power(),
                            ks: k.psi_exponents().to_vec(),
                            value: ratio_string(v),
                        })
                        .collect();
                    let text = serde_json::to_string_pretty(&rows).expect("serializable");
                    writeln!(out, "{text}")?;
                }
                TableFormat::Csv => {
                    let mut w = csv::Writer::from_writer(&mut *out);
                    w.write_record(["g", "k0", "ks", "numerator", "denominator"])?;
                    for (k, v) in &table {
                        let ks: Vec<String> = k.psi_exponents().iter().map(|x| x.to_string()).collect();
                        w.write_record([
                            k.genus().to_string(),
                            k.kappa_power().to_string(),
                            ks.join(";"),
                            v.numer().to_string(),
                            v.denom().to_string(),
                        ])?;
                    }
                    w.flush()?;
                }
                TableFormat::Text => {
                    for (k, v) in &table {
                        writeln!(out, "{k} = {v}")?;
                    }
                }
            }
            writeln!(err, "{} correlators; {}", table.len(), engine.stats())?;
            EXIT_OK
        }
        Command::Volume {
            genus,
            npoints,
            at,
            format,
        } => {
            let poly = volume_polynomial(&engine, *genus, *npoints)?;
            match at {
                Some(ls) => writeln!(out, "{}", poly.evaluate(ls)?)?,
                None => match format {
                    OutputFormat::Text => writeln!(out, "{poly}")?,
                    OutputFormat::Json => writeln!(out, "{}", poly.to_json(*genus))?,
                },
            }
            EXIT_OK
        }
        Command::Verify { suite, tol } => {
            if tol.is_nan() || *tol <= 0.0 {
                return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
            }
            let mut reports: Vec<SuiteReport> = Vec::new();
            let wants = |s: Suite| *suite == s || *suite == Suite::All;
            if wants(Suite::Dvv) {
                reports.push(dvv_suite(&engine, 6));
            }
            if wants(Suite::Kappa) {
                reports.push(kappa_suite(&engine, 5, 3));
            }
            if wants(Suite::Kernel) {
                reports.push(kernel_suite(*tol, *tol));
            }
            if wants(Suite::StringDilaton) {
                reports.push(string_dilaton_suite(6));
            }
            let mut ok = true;
            for r in &reports {
                writeln!(out, "{r}")?;
                ok &= r.all_passed();
            }
            writeln!(out, "{}", if ok { "ALL PASSED" } else { "FAILURES PRESENT" })?;
            if ok {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }
        Command::Gf { gmax, dim_max, format } => {
            let coeffs = generating_function_coeffs(&engine, *gmax, *dim_max)?;
            match format {
                OutputFormat::Text => {
                    for c in &coeffs {
                        writeln!(out, "{c}")?;
                    }
                }
                OutputFormat::Json => {
                    let text = serde_json::to_string_pretty(&coeffs).expect("serializable");
                    writeln!(out, "{text}")?;
                }
            }
            EXIT_OK
        }
    };

    if let Some(path) = &cli.cache_file {
        engine.save_cache(path)?;
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(g: u32, k0: u32, ks: &[u32]) -> CorrelatorKey {
        CorrelatorKey::new(g, k0, ks.to_vec()).unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_correlator("<tau0^3>_g=0").unwrap(), key(0, 0, &[0, 0, 0]));
        assert_eq!(
            parse_correlator("<kappa1^2 tau0 tau0>_g=1").unwrap(),
            key(1, 2, &[0, 0])
        );
        assert!(matches!(
            parse_correlator("<kappa2 tau0>_g=1"),
            Err(ParseError::UnknownClass { offset: 1, .. })
        ));
    }

    #[test]
    fn parse_canonical_form() {
        let k = key(1, 2, &[1, 0, 1]);
        assert_eq!(parse_correlator(&k.to_string()).unwrap(), k);
        assert_eq!(parse_correlator("<kappa1 tau1 tau0>_1").unwrap(), key(1, 1, &[1, 0]));
        assert_eq!(parse_correlator("  <tau4>_g=2 ").unwrap(), key(2, 0, &[4]));
        assert_eq!("<tau1>_1".parse::<CorrelatorKey>().unwrap(), key(1, 0, &[1]));
    }

    #[test]
    fn parse_errors() {
        let off = |s: &str| match parse_correlator(s) {
            Err(ParseError::Syntax { offset, .. }) => offset,
            other => panic!("{s}: {other:?}"),
        };
        assert_eq!(off("tau0>_g=0"), 0);
        assert_eq!(off("<tau0 tau0 tau0"), 15);
        assert_eq!(off("<tau>_g=0"), 4);
        assert_eq!(off("<tau0tau0>_0"), 5);
        assert_eq!(off("<tau0^3>g=0"), 8);
        assert_eq!(off("<tau0^3>_g=0x"), 12);
        assert_eq!(off("<>_0"), 1);
        assert!(matches!(
            parse_correlator("<psi1>_1"),
            Err(ParseError::UnknownClass { offset: 1, .. })
        ));
        assert!(matches!(
            parse_correlator("<tau0 tau0>_0"),
            Err(ParseError::Key(KeyError::Unstable { g: 0, n: 2 }))
        ));
        assert!(matches!(
            parse_correlator("<kappa1>_2"),
            Err(ParseError::Key(KeyError::NoMarkedPoints))
        ));
    }

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["mgn"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn eval_command() {
        let (code, out, _) = run_capture(&["eval", "<tau1>_g=1"]);
        assert_eq!((code, out.as_str()), (0, "1/24\n"));
        let (code, _, err) = run_capture(&["eval", "<tau1"]);
        assert_eq!(code, 2);
        assert!(err.contains("byte 5"));
        let (code, _, _) = run_capture(&["frobnicate"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn eval_breakdown() {
        let (code, out, _) = run_capture(&["eval", "<tau2 tau0>_g=1", "--breakdown"]);
        assert_eq!(code, 0);
        assert_eq!(
            out,
            "1/24\n(2*2+1)!! = 15\n  merge j=2, l=0: 1/8\n  nonsep d=(0,0), l=0: 1/2\n  total: 5/8\n"
        );
    }

    #[test]
    fn volume_command() {
        let (code, out, _) = run_capture(&["volume", "--genus", "1", "--npoints", "1"]);
        assert_eq!((code, out.as_str()), (0, "1/12*pi^2 + 1/48*L1^2\n"));
        let (code, _, err) = run_capture(&["volume", "--genus", "1", "--npoints", "1", "--at", "1,2"]);
        assert_eq!(code, 2);
        assert!(err.contains("expected 1 boundary lengths"));
    }
}
