use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use dirac_numerov::{Ansatz, KSign, Scheme};

#[derive(Debug, Parser)]
#[command(name = "dirac-numerov", version, about = "Dirac hydrogen ground states in D spatial dimensions")]
pub struct Cli {
    /// Worker threads (default: logical processors). DIRAC_NUMEROV_THREADS overrides it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// key = value file with the same keys as the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground states of the 1/r potential for D = 3..9, analytic vs numeric.
    Table1 {
        #[command(flatten)]
        settings: SettingsArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Ground state of one configuration; writes a run manifest.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        settings: SettingsArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Ground states over a range of dimensions.
    Scan {
        #[arg(long)]
        d_min: Option<u32>,
        #[arg(long)]
        d_max: Option<u32>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        settings: SettingsArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Radial profile of one quantity as CSV.
    Profile {
        #[arg(long)]
        quantity: Option<Quantity>,
        /// E/M, or `ground` to solve for it first.
        #[arg(long)]
        eta: Option<EtaChoice>,
        /// Keep every n-th grid node.
        #[arg(long)]
        stride: Option<usize>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        settings: SettingsArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Quick consistency checks.
    Selftest,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub dimension: Option<u32>,
    #[arg(long)]
    pub ell: Option<u32>,
    /// 1: U = -xi/r; 2: U = -xi/r^(D-2).
    #[arg(long)]
    pub ansatz: Option<AnsatzArg>,
    #[arg(long)]
    pub k_sign: Option<KSignArg>,
}

#[derive(Debug, Clone, Args)]
pub struct SettingsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub eta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta_max: Option<f64>,
    #[arg(long)]
    pub scan_points: Option<usize>,
    #[arg(long)]
    pub root_tol: Option<f64>,
    #[arg(long)]
    pub mismatch_tol: Option<f64>,
    /// Inner cutoff.
    #[arg(long)]
    pub grid_a: Option<f64>,
    /// Fixed outer edge (default: chosen from the outer turning point).
    #[arg(long)]
    pub grid_b: Option<f64>,
    /// Maximum step.
    #[arg(long)]
    pub grid_delta: Option<f64>,
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim() {
                    $($text => Ok(Self::$variant),)+
                    other => Err(format!(
                        "expected one of {}, got {other:?}",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $text),+ })
            }
        }
    };
}

keyword_enum!(AnsatzArg { One => "1", Two => "2" });
keyword_enum!(SchemeArg { Generalized => "generalized", Canonical => "canonical" });
keyword_enum!(KSignArg { Plus => "plus", Minus => "minus" });
keyword_enum!(Format { Csv => "csv", Json => "json" });
keyword_enum!(Quantity {
    PhiPlus => "phi_plus",
    F => "F",
    G => "G",
    EffectivePotential => "effective_potential",
    MismatchScan => "mismatch_scan",
});

impl From<AnsatzArg> for Ansatz {
    fn from(a: AnsatzArg) -> Self {
        match a {
            AnsatzArg::One => Ansatz::CoulombOneOverR,
            AnsatzArg::Two => Ansatz::CoulombGeneralized,
        }
    }
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Generalized => Scheme::Generalized,
            SchemeArg::Canonical => Scheme::Canonical,
        }
    }
}

impl From<KSignArg> for KSign {
    fn from(k: KSignArg) -> Self {
        match k {
            KSignArg::Plus => KSign::Plus,
            KSignArg::Minus => KSign::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaChoice {
    Ground,
    Value(f64),
}

impl FromStr for EtaChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "ground" => Ok(EtaChoice::Ground),
            v => v
                .parse()
                .map(EtaChoice::Value)
                .map_err(|_| format!("expected a number or `ground`, got {v:?}")),
        }
    }
}

impl fmt::Display for EtaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaChoice::Ground => f.write_str("ground"),
            EtaChoice::Value(v) => write!(f, "{v}"),
        }
    }
}
