use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use socanon::addr::{AddressAnonymizer, Token};
use socanon::adversary::{
    certain_inference_rate, homogeneity_sweep, neighborhood_sweep, utility_report_with, SweepRow,
};
use socanon::collab::{FlattenConfig, PartyId, PartyNetwork, Predicate};
use socanon::graph::{parse_network, serialize_network};
use socanon::kanon::{k_anonymize, verify_k_anonymity};
use socanon::ldiv::{check_l_diversity, enforce_k_and_l, enforce_l_diversity};
use socanon::naive::{apply_mapping, naive_anonymize};
use socanon::partition::{
    automorphic_equivalence, reduction_network, stable_refinement, structural_equivalence,
    vertex_refinement,
};
use socanon::{
    AnonScheme, AnonymizationMapping, CollabStore, Ipv4Address, KAnonConfig, LDivConfig,
    LabelHierarchy, Privacy, Radius, SocialNetwork, UserQuery,
};

/// Fixed so that runs are reproducible unless a seed is given.
const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "socanon", version, about = "Anonymize labeled social networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// Input file; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct KArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    radius: u8,
}

impl KArgs {
    fn config(&self) -> Result<KAnonConfig> {
        let cfg = KAnonConfig::new(self.k)
            .with_weights(self.alpha, self.beta, self.gamma)
            .with_radius(radius(self.radius)?);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionArg {
    Refinement,
    Structural,
    Automorphic,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackMode {
    Neighborhood,
    Homogeneity,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    BlackMarker,
    Permute,
    Truncate,
    Pseudonym,
    PrefixPreserving,
}

#[derive(Subcommand)]
enum Command {
    /// Replace identities by pseudonyms and publish the exact structure.
    Naive {
        #[command(flatten)]
        io: Io,
        /// Where to write the `<original-id> <pseudonym>` table.
        #[arg(long)]
        mapping_out: Option<PathBuf>,
        /// Use this table instead of a random one; keys are ids or labels.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Make every radius-r neighborhood shared by at least k vertices.
    AnonymizeK {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        k: KArgs,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Give every refinement class at least l distinct sensitive values.
    AnonymizeL {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        l: usize,
        /// Also enforce neighborhood k-anonymity when above 1.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Check k-anonymity, and l-diversity when --l is given. Exits 1 if a
    /// check fails.
    Verify {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        radius: u8,
        #[arg(long)]
        l: Option<usize>,
    },
    /// Print a vertex partition and, for structural ones, the reduction.
    Partition {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value = "refinement")]
        kind: PartitionArg,
        /// Refinement level; the stable level when absent.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Merge a party's contribution into a collaborative store.
    Merge {
        /// Store log (JSON lines); created when missing.
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        party: String,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Identifying attribute keys, for a new store.
        #[arg(long, value_delimiter = ',', default_value = "label")]
        identifying: Vec<String>,
        /// Privacy level of a new store's snapshots.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Withdraw a party's earlier contribution from a store.
    Revoke {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        party: String,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Release the anonymized subgraph of the nodes matching all predicates.
    Query {
        #[arg(long)]
        store: PathBuf,
        /// `key=value`, repeatable.
        #[arg(long = "where", required = true)]
        predicates: Vec<String>,
        #[arg(long, default_value = "anonymous")]
        requester: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run an attack on a published network and write a CSV report.
    Attack {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum)]
        mode: AttackMode,
        /// Original network; the neighborhood attack uses its neighborhoods
        /// as knowledge.
        #[arg(long)]
        original: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        radius: u8,
        /// Refinement level defining the classes; the stable level when absent.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Anonymize IPv4 addresses, one per line or in CSV columns.
    AnonIp {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        keep: Option<u8>,
        #[arg(long, env = "SOCANON_KEY", hide_env_values = true)]
        key: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Treat the input as CSV with a header and replace these columns.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        /// Pseudonym table (two-column CSV), read if present and rewritten.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Summary statistics, and utility loss against --original.
    Stats {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        original: Option<PathBuf>,
        #[arg(long)]
        hierarchy: Option<PathBuf>,
    },
}

fn radius(r: u8) -> Result<Radius> {
    Ok(Radius::from_hops(r as usize)?)
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .context("reading standard input")?;
            Ok(s)
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial file.
fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    let Some(path) = path else {
        io::stdout().write_all(contents.as_bytes())?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_network(path: Option<&Path>) -> Result<SocialNetwork> {
    let name = path.map_or("<stdin>".into(), |p| p.display().to_string());
    parse_network(&read_input(path)?).with_context(|| format!("parsing {name}"))
}

fn load_hierarchy(path: Option<&Path>, g: &SocialNetwork) -> Result<LabelHierarchy> {
    let h = match path {
        Some(p) => LabelHierarchy::parse(&read_input(Some(p))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => LabelHierarchy::flat_over(g),
    };
    h.check_covers(g)?;
    Ok(h)
}

fn load_store(path: &Path) -> Result<Option<CollabStore>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = read_input(Some(path))?;
    Ok(Some(CollabStore::replay(&text).with_context(|| {
        format!("replaying {}", path.display())
    })?))
}

fn contribution(party: &str, input: Option<&Path>) -> Result<PartyNetwork> {
    let text = read_input(input)?;
    PartyNetwork::parse(PartyId::new(party)?, &text).context("parsing contribution")
}

fn partition_for(g: &SocialNetwork, level: Option<usize>) -> socanon::EquivalencePartition {
    match level {
        Some(i) => vertex_refinement(g, i),
        None => stable_refinement(g).1,
    }
}

fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "target",
        "knowledge",
        "candidates",
        "confidence",
        "certain_inference",
    ])?;
    for r in rows {
        w.write_record([
            r.target.to_string(),
            r.knowledge.clone(),
            r.candidates.to_string(),
            format!("{:.6}", r.confidence),
            r.certain_inference
                .as_ref()
                .map_or(String::new(), |s| s.to_string()),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn scheme(s: SchemeArg, keep: Option<u8>, key: Option<String>, seed: u64) -> Result<AnonScheme> {
    Ok(match s {
        SchemeArg::BlackMarker => AnonScheme::BlackMarker,
        SchemeArg::Truncate => AnonScheme::Truncation {
            keep: keep.context("--keep is required for truncation")?,
        },
        SchemeArg::Permute => AnonScheme::RandomPermutation { seed },
        SchemeArg::Pseudonym => AnonScheme::Pseudonym { seed },
        SchemeArg::PrefixPreserving => AnonScheme::PrefixPreserving {
            key: key.context("--key or SOCANON_KEY is required for prefix preservation")?,
        },
    })
}

fn load_table(anon: &mut AddressAnonymizer, path: &Path) -> Result<()> {
    let Some(table) = anon.table_mut() else {
        bail!("--table only applies to the pseudonym scheme");
    };
    if !path.exists() {
        return Ok(());
    }
    let mut r = csv::Reader::from_path(path)?;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("{}: row {}", path.display(), i + 2);
        let a: Ipv4Address = rec.get(0).unwrap_or_default().parse().with_context(ctx)?;
        let t: Token = rec.get(1).unwrap_or_default().parse().with_context(ctx)?;
        table.insert(a, t).with_context(ctx)?;
    }
    Ok(())
}

fn table_csv(anon: &AddressAnonymizer) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["address", "token"])?;
    for (a, t) in anon.table().into_iter().flat_map(|t| t.iter()) {
        w.write_record([a.to_string(), t.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn anonymize_lines(anon: &mut AddressAnonymizer, text: &str) -> Result<String> {
    let mut out = String::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            out.push('\n');
            continue;
        }
        let a: Ipv4Address = trimmed.parse().with_context(|| format!("line {}", i + 1))?;
        out.push_str(&anon.anonymize(a));
        out.push('\n');
    }
    Ok(out)
}

fn anonymize_csv(anon: &mut AddressAnonymizer, text: &str, columns: &[String]) -> Result<String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .with_context(|| format!("no column {c:?} in the header"))
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&headers)?;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut fields: Vec<String> = rec.iter().map(String::from).collect();
        for &j in &idx {
            let a: Ipv4Address = fields[j]
                .parse()
                .with_context(|| format!("row {}, column {}", i + 2, &headers[j]))?;
            fields[j] = anon.anonymize(a);
        }
        w.write_record(&fields)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Naive {
            io,
            mapping_out,
            mapping,
            seed,
        } => {
            let g = load_network(io.input.as_deref())?;
            let (out, m) = match mapping {
                Some(p) => {
                    let m = AnonymizationMapping::parse_for(&g, &read_input(Some(&p))?)
                        .with_context(|| format!("parsing {}", p.display()))?;
                    (apply_mapping(&g, &m)?, m)
                }
                None => naive_anonymize(&g, seed),
            };
            write_output(io.output.as_deref(), &serialize_network(&out))?;
            if let Some(p) = mapping_out {
                write_output(Some(&p), &m.to_text())?;
            }
        }
        Command::AnonymizeK {
            io,
            k,
            hierarchy,
            seed,
        } => {
            let g = load_network(io.input.as_deref())?;
            let h = load_hierarchy(hierarchy.as_deref(), &g)?;
            let (out, report) = k_anonymize(&g, &k.config()?, &h, seed)?;
            write_output(io.output.as_deref(), &serialize_network(&out))?;
            eprintln!(
                "edges added: {}, labels generalized: {}, vertices added: {}, synthetic: {}, cost: {}",
                report.edges_added,
                report.labels_generalized,
                report.vertices_added,
                report.synthetic.len(),
                report.total_cost
            );
        }
        Command::AnonymizeL {
            io,
            l,
            k,
            hierarchy,
            seed,
        } => {
            let g = load_network(io.input.as_deref())?;
            let h = load_hierarchy(hierarchy.as_deref(), &g)?;
            let lcfg = LDivConfig::new(l);
            let kcfg = KAnonConfig::new(k);
            let (out, report) = if k > 1 {
                enforce_k_and_l(&g, &lcfg, &kcfg, &h, seed)?
            } else {
                enforce_l_diversity(&g, &lcfg, &kcfg, &h, seed)?
            };
            write_output(io.output.as_deref(), &serialize_network(&out))?;
            eprint!("{}", report.to_table());
        }
        Command::Verify {
            input,
            k,
            radius: r,
            l,
        } => {
            let g = load_network(input.as_deref())?;
            let k_ok = verify_k_anonymity(&g, k, radius(r)?)?;
            println!("k-anonymous: {k_ok}");
            let mut ok = k_ok;
            if let Some(l) = l {
                let (_, p) = stable_refinement(&g);
                let report = check_l_diversity(&g, &p, &LDivConfig::new(l))?;
                println!("l-diverse: {}", report.overall);
                ok &= report.overall;
            }
            return Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
        Command::Partition { io, kind, level } => {
            let g = load_network(io.input.as_deref())?;
            let mut text = String::new();
            match kind {
                PartitionArg::Refinement => {
                    let (stable, _) = stable_refinement(&g);
                    let p = partition_for(&g, level);
                    text.push_str(&format!("# stable level {stable}\n{p}"));
                }
                PartitionArg::Structural => {
                    let p = structural_equivalence(&g);
                    let r = reduction_network(&g, &p)?;
                    text.push_str(&format!("{p}# reduction network\n{r}"));
                }
                PartitionArg::Automorphic => {
                    text.push_str(&automorphic_equivalence(&g)?.to_string());
                }
            }
            write_output(io.output.as_deref(), &text)?;
        }
        Command::Merge {
            store,
            party,
            input,
            identifying,
            k,
            l,
            seed,
        } => {
            let mut s = match load_store(&store)? {
                Some(s) => s,
                None => {
                    let privacy = (k.is_some() || l.is_some()).then(|| Privacy {
                        k: KAnonConfig::new(k.unwrap_or(1)),
                        l: LDivConfig::new(l.unwrap_or(1)),
                    });
                    CollabStore::new(identifying, FlattenConfig::default(), privacy, seed)?
                }
            };
            s.merge(&contribution(&party, input.as_deref())?)?;
            write_output(Some(&store), &s.to_log_text()?)?;
        }
        Command::Revoke {
            store,
            party,
            input,
        } => {
            let Some(mut s) = load_store(&store)? else {
                bail!("store {} does not exist", store.display());
            };
            s.revoke(&contribution(&party, input.as_deref())?)?;
            write_output(Some(&store), &s.to_log_text()?)?;
        }
        Command::Query {
            store,
            predicates,
            requester,
            k,
            l,
            output,
        } => {
            let Some(s) = load_store(&store)? else {
                bail!("store {} does not exist", store.display());
            };
            let preds = predicates
                .iter()
                .map(|p| p.parse::<Predicate>())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let q = UserQuery::new(&requester, preds)?;
            let wanted = Privacy {
                k: KAnonConfig::new(k),
                l: LDivConfig::new(l),
            };
            let out = s.query(&q, &wanted)?;
            write_output(output.as_deref(), &serialize_network(&out))?;
        }
        Command::Attack {
            io,
            mode,
            original,
            radius: r,
            level,
        } => {
            let published = load_network(io.input.as_deref())?;
            let rows = match mode {
                AttackMode::Neighborhood => {
                    let original = match original {
                        Some(p) => load_network(Some(&p))?,
                        None => published.clone(),
                    };
                    neighborhood_sweep(&original, &published, radius(r)?)?
                }
                AttackMode::Homogeneity => {
                    homogeneity_sweep(&published, &partition_for(&published, level))?
                }
            };
            write_output(io.output.as_deref(), &sweep_csv(&rows)?)?;
            eprintln!("certain-inference rate: {}", certain_inference_rate(&rows));
        }
        Command::AnonIp {
            io,
            scheme: s,
            keep,
            key,
            seed,
            columns,
            table,
        } => {
            let mut anon = scheme(s, keep, key, seed)?.anonymizer()?;
            if let Some(p) = &table {
                load_table(&mut anon, p)?;
            }
            let text = read_input(io.input.as_deref())?;
            let out = if columns.is_empty() {
                anonymize_lines(&mut anon, &text)?
            } else {
                anonymize_csv(&mut anon, &text, &columns)?
            };
            write_output(io.output.as_deref(), &out)?;
            if let Some(p) = &table {
                write_output(Some(p), &table_csv(&anon)?)?;
            }
        }
        Command::Stats {
            input,
            original,
            hierarchy,
        } => {
            let g = load_network(input.as_deref())?;
            let degrees = g.degree_sequence();
            let max = degrees.iter().max().copied().unwrap_or(0);
            let mean = if degrees.is_empty() {
                0.0
            } else {
                degrees.iter().sum::<usize>() as f64 / degrees.len() as f64
            };
            println!("vertices: {}", g.vertex_count());
            println!("edges: {}", g.edge_count());
            println!("labels: {}", g.label_universe().len());
            println!("sensitive values: {}", g.sensitive_values().len());
            println!("components: {}", g.components().len());
            println!("mean degree: {mean:.3}");
            println!("max degree: {max}");
            if let Some(p) = original {
                let o = load_network(Some(&p))?;
                let mut h = load_hierarchy(hierarchy.as_deref(), &o)?;
                h.extend_flat(&g);
                let m = utility_report_with(&o, &g, &h);
                println!("degree L1: {:.6}", m.degree_l1);
                println!("edge inflation: {:.6}", m.edge_inflation);
                println!("edges added: {}", m.edges_added);
                println!("vertices added: {}", m.vertices_added);
                for (height, n) in &m.label_heights {
                    println!("labels generalized by {height}: {n}");
                }
                println!("labels not generalized: {}", m.labels_not_generalized);
                println!("average path delta: {:.6}", m.average_path_delta);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
