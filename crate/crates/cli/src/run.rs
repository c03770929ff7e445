//! Protocol dispatch and parameter sweeps.

use std::f64::consts::PI;
use std::str::FromStr;

use clap::Args;
use ringqed::effective::StarkCompensation;
use ringqed::parallel::ordered_map;
use ringqed::protocols::{protocol_transfer, Summary, Table};
use ringqed::{
    build_effective_xy_chain, protocol_cluster, protocol_entangle, protocol_parallel,
    protocol_xy_quench, Branch, ClusterOptions, ClusterSource, Coupling, GateKind, NetworkConfig,
    RunOptions, C64,
};

use crate::{CliResult, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolName {
    Entangle,
    Transfer,
    Parallel,
    Cluster,
    Xy,
}

impl FromStr for ProtocolName {
    type Err = Failure;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "entangle" => Self::Entangle,
            "transfer" => Self::Transfer,
            "parallel" => Self::Parallel,
            "cluster" => Self::Cluster,
            "xy" => Self::Xy,
            other => {
                return Err(Failure::usage(format!(
                    "unknown protocol '{other}' (entangle, transfer, parallel, cluster, xy)"
                )))
            }
        })
    }
}

/// Protocol-specific flags; each protocol reads the ones it needs.
#[derive(Args, Debug, Clone, Default)]
pub struct ProtocolArgs {
    /// Atom pair `p,q` for entangle and transfer (default: the two driven atoms).
    #[arg(long)]
    pub pair: Option<String>,
    /// Transfer input on `p`: g, e, plus, minus, or real amplitudes `a,b`.
    #[arg(long, default_value = "e")]
    pub input: String,
    /// Parallel pairs, e.g. `1-2:exchange,3-4:phase` (kind defaults to the drive branch).
    #[arg(long)]
    pub pairs: Option<String>,
    /// Keep every cross-pair coupling in parallel runs.
    #[arg(long)]
    pub coupled: bool,
    /// Initially excited sites for xy, comma-separated.
    #[arg(long, default_value = "1")]
    pub excite: String,
    /// Stark handling for xy: uniform or none.
    #[arg(long, default_value = "uniform")]
    pub stark: String,
    /// Cluster ring without a config: `n,epsilon,coupling`.
    #[arg(long)]
    pub direct: Option<String>,
    /// Skip the single-qubit Stark rotation at the end of the cluster run.
    #[arg(long)]
    pub no_rotate: bool,
}

pub struct Report {
    pub summary: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub table: Table,
}

impl Report {
    fn from_parts(summary: Summary, table: Table) -> Self {
        Self {
            summary: summary.values,
            notes: summary.notes,
            table,
        }
    }
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Failure::usage(format!("bad {what} '{s}'")))
        })
        .collect()
}

fn driven_atoms(config: &NetworkConfig) -> Vec<usize> {
    let mut atoms: Vec<usize> = config.active_drives().map(|d| d.atom).collect();
    atoms.sort_unstable();
    atoms.dedup();
    atoms
}

fn pair(config: &NetworkConfig, text: &Option<String>) -> CliResult<(usize, usize)> {
    match text {
        Some(t) => match parse_list::<usize>(t, "pair")?.as_slice() {
            [p, q] => Ok((*p, *q)),
            _ => Err(Failure::usage("--pair expects two atoms, e.g. 1,3")),
        },
        None => match driven_atoms(config).as_slice() {
            [p, q] => Ok((*p, *q)),
            _ => Err(Failure::usage(
                "config does not drive exactly two atoms; pass --pair",
            )),
        },
    }
}

fn transfer_input(text: &str) -> CliResult<(C64, C64)> {
    let h = 0.5f64.sqrt();
    let real = |a: f64, b: f64| (C64::new(a, 0.0), C64::new(b, 0.0));
    Ok(match text {
        "g" => real(1.0, 0.0),
        "e" => real(0.0, 1.0),
        "plus" => real(h, h),
        "minus" => real(h, -h),
        other => match parse_list::<f64>(other, "input amplitude")?.as_slice() {
            [a, b] => real(*a, *b),
            _ => {
                return Err(Failure::usage(
                    "--input expects g, e, plus, minus or two amplitudes",
                ))
            }
        },
    })
}

fn parallel_pairs(config: &NetworkConfig, text: &str) -> CliResult<Vec<(usize, usize, GateKind)>> {
    text.split(',')
        .map(|item| {
            let (atoms, kind) = match item.split_once(':') {
                Some((a, k)) => (a, Some(k.trim())),
                None => (item, None),
            };
            let (p, q) = atoms.split_once('-').ok_or_else(|| {
                Failure::usage(format!("bad pair '{item}' (expected p-q[:kind])"))
            })?;
            let p: usize = p
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("bad atom in '{item}'")))?;
            let q: usize = q
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("bad atom in '{item}'")))?;
            let kind = match kind {
                Some("exchange") => GateKind::Exchange,
                Some("phase") => GateKind::Phase,
                Some(other) => return Err(Failure::usage(format!("unknown gate kind '{other}'"))),
                None => match config
                    .drives_on(p)
                    .find(|d| d.is_active())
                    .map(|d| d.branch)
                {
                    Some(Branch::Ground) => GateKind::Phase,
                    _ => GateKind::Exchange,
                },
            };
            Ok((p, q, kind))
        })
        .collect()
}

fn stark(text: &str) -> CliResult<StarkCompensation> {
    match text {
        "uniform" => Ok(StarkCompensation::Uniform),
        "none" => Ok(StarkCompensation::None),
        other => Err(Failure::usage(format!(
            "unknown Stark mode '{other}' (uniform, none)"
        ))),
    }
}

fn need(config: Option<&NetworkConfig>) -> CliResult<&NetworkConfig> {
    config.ok_or_else(|| Failure::usage("--config is required for this protocol"))
}

pub fn run_protocol(
    name: ProtocolName,
    config: Option<&NetworkConfig>,
    args: &ProtocolArgs,
    opts: &RunOptions,
) -> CliResult<Report> {
    Ok(match name {
        ProtocolName::Entangle => {
            let config = need(config)?;
            let (p, q) = pair(config, &args.pair)?;
            let r = protocol_entangle(config, p, q, opts)?;
            Report::from_parts(r.summary, r.table)
        }
        ProtocolName::Transfer => {
            let config = need(config)?;
            let (p, q) = pair(config, &args.pair)?;
            let r = protocol_transfer(config, p, q, transfer_input(&args.input)?, opts)?;
            Report::from_parts(r.summary, r.table)
        }
        ProtocolName::Parallel => {
            let config = need(config)?;
            let text = args
                .pairs
                .as_deref()
                .ok_or_else(|| Failure::usage("parallel needs --pairs"))?;
            let pairs = parallel_pairs(config, text)?;
            let coupling = if args.coupled {
                Coupling::AllPairs
            } else {
                Coupling::Blocks
            };
            let r = protocol_parallel(config, &pairs, coupling, opts)?;
            Report::from_parts(r.summary, r.table)
        }
        ProtocolName::Cluster => {
            let source = match &args.direct {
                Some(text) => match parse_list::<f64>(text, "--direct value")?.as_slice() {
                    [n, epsilon, coupling] if n.fract() == 0.0 && *n >= 0.0 => {
                        ClusterSource::Direct {
                            n: *n as usize,
                            epsilon: *epsilon,
                            coupling: *coupling,
                        }
                    }
                    _ => return Err(Failure::usage("--direct expects n,epsilon,coupling")),
                },
                None => ClusterSource::Config(need(config)?.clone()),
            };
            let cluster_opts = ClusterOptions {
                rotate: !args.no_rotate,
                run: opts.clone(),
            };
            let r = protocol_cluster(&source, &cluster_opts)?;
            Report::from_parts(r.summary, r.table)
        }
        ProtocolName::Xy => {
            let config = need(config)?;
            let excited = parse_list::<usize>(&args.excite, "site")?;
            let stark = stark(&args.stark)?;
            let link = build_effective_xy_chain(config, stark)?
                .links
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            let t_end = match opts.t_end {
                Some(t) => t,
                None if link > 0.0 => 2.0 * PI / link,
                None => {
                    return Err(Failure::usage(
                        "xy needs --t-end when every link coupling vanishes",
                    ))
                }
            };
            let r = protocol_xy_quench(config, &excited, stark, t_end, opts)?;
            Report::from_parts(r.summary, r.table)
        }
    })
}

/// Parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepParam {
    Nu,
    Delta2,
    G,
    Rabi(usize),
    Detuning(usize),
    Gamma,
    Kappa,
    /// Sets `gamma` and `kappa` together.
    Decay,
}

impl FromStr for SweepParam {
    type Err = Failure;

    fn from_str(s: &str) -> CliResult<Self> {
        let indexed = |prefix: &str| -> Option<CliResult<usize>> {
            let inner = s
                .strip_prefix(prefix)?
                .strip_prefix('[')?
                .strip_suffix(']')?;
            Some(
                inner
                    .parse()
                    .map_err(|_| Failure::usage(format!("bad atom index in '{s}'"))),
            )
        };
        if let Some(l) = indexed("rabi") {
            return Ok(Self::Rabi(l?));
        }
        if let Some(l) = indexed("detuning") {
            return Ok(Self::Detuning(l?));
        }
        Ok(match s {
            "nu" => Self::Nu,
            "delta2" => Self::Delta2,
            "g" => Self::G,
            "gamma" => Self::Gamma,
            "kappa" => Self::Kappa,
            "decay" => Self::Decay,
            other => {
                return Err(Failure::usage(format!(
                    "unknown sweep parameter '{other}' (nu, delta2, g, rabi[l], detuning[l], gamma, kappa, decay)"
                )))
            }
        })
    }
}

impl SweepParam {
    fn label(self) -> String {
        match self {
            Self::Nu => "nu".into(),
            Self::Delta2 => "delta2".into(),
            Self::G => "g".into(),
            Self::Rabi(l) => format!("rabi_{l}"),
            Self::Detuning(l) => format!("detuning_{l}"),
            Self::Gamma => "gamma".into(),
            Self::Kappa => "kappa".into(),
            Self::Decay => "decay".into(),
        }
    }

    /// Copy of `config` with the parameter set to `value` (all drives of atom `l`
    /// for the per-atom parameters).
    pub fn apply(self, config: &NetworkConfig, value: f64) -> CliResult<NetworkConfig> {
        let mut c = config.clone();
        let on_atom =
            |c: &mut NetworkConfig, l: usize, set: &dyn Fn(&mut ringqed::Drive)| -> CliResult<()> {
                let mut touched = false;
                for d in c.drives.iter_mut().filter(|d| d.atom == l) {
                    set(d);
                    touched = true;
                }
                if touched {
                    Ok(())
                } else {
                    Err(Failure::usage(format!("atom {l} has no drive to sweep")))
                }
            };
        match self {
            Self::Nu => c.nu = value,
            Self::Delta2 => c.delta2 = value,
            Self::G => c.g = value,
            Self::Rabi(l) => on_atom(&mut c, l, &|d| d.rabi = value)?,
            Self::Detuning(l) => on_atom(&mut c, l, &|d| d.detuning = value)?,
            Self::Gamma => c.gamma = value,
            Self::Kappa => c.kappa = value,
            Self::Decay => {
                c.gamma = value;
                c.kappa = value;
            }
        }
        Ok(c)
    }
}

pub fn sweep_values(values: Option<&str>, range: Option<&str>) -> CliResult<Vec<f64>> {
    let out = match (values, range) {
        (Some(v), _) => parse_list::<f64>(v, "sweep value")?,
        (None, Some(r)) => {
            let parts: Vec<&str> = r.split(':').collect();
            let [start, stop, count] = parts.as_slice() else {
                return Err(Failure::usage("--range expects start:stop:count"));
            };
            let bad = || Failure::usage(format!("bad range '{r}'"));
            let start: f64 = start.trim().parse().map_err(|_| bad())?;
            let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..count)
                    .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                    .collect(),
            }
        }
        (None, None) => return Err(Failure::usage("sweep needs --values or --range")),
    };
    if out.is_empty() {
        return Err(Failure::usage("sweep range is empty"));
    }
    Ok(out)
}

/// One row per value: the parameter followed by the protocol summary.
pub fn sweep(
    name: ProtocolName,
    config: &NetworkConfig,
    param: SweepParam,
    values: &[f64],
    args: &ProtocolArgs,
    opts: &RunOptions,
    parallel: bool,
) -> CliResult<Table> {
    let results = ordered_map(values, parallel, |&v| {
        let point = param.apply(config, v)?;
        run_protocol(name, Some(&point), args, opts).map(|r| r.summary)
    });
    let summaries = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let keys: Vec<String> = summaries[0].iter().map(|(k, _)| k.clone()).collect();
    let mut columns = vec![param.label()];
    columns.extend(keys.iter().cloned());
    let rows = values
        .iter()
        .zip(&summaries)
        .map(|(v, summary)| {
            let mut row = vec![*v];
            row.extend(keys.iter().map(|k| {
                summary
                    .iter()
                    .find(|(key, _)| key == k)
                    .map(|(_, x)| *x)
                    .unwrap_or(f64::NAN)
            }));
            row
        })
        .collect();
    Ok(Table { columns, rows })
}
