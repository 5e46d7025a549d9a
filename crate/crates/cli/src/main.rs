use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_traits::One;
use serde_json::{json, Value};

use coldboot::channel::{self, DEFAULT_PRECISION};
use coldboot::costs::{self, builtin_gate_counts, grover_cost};
use coldboot::enumeration::{generate_candidates, CandidateTable, EnumerationParams};
use coldboot::grover::Backend;
use coldboot::harness::{run_experiment, ExperimentSpec};
use coldboot::lowmc::{self, LowMc, LowMcParams, DEFAULT_ROUNDS};
use coldboot::rankindex::{self, WeightInterval};
use coldboot::search::{self, SearchPlan, TestOracle};
use coldboot::{BitString, ChannelParams};

#[derive(Parser)]
#[command(name = "coldboot", version, about = "Key recovery from decayed key images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay a key through the asymmetric bit-flip channel.
    Perturb {
        #[arg(long)]
        key: String,
        /// Key length in bits (defaults to 8 per hex byte).
        #[arg(long)]
        bits: Option<usize>,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the per-block candidate lists for a noisy key.
    Enumerate {
        #[arg(long)]
        noisy: String,
        #[command(flatten)]
        enumeration: EnumArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count candidates with total weight in [b1, b2).
    Rank {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        b1: u64,
        #[arg(long)]
        b2: u64,
    },
    /// The r-th candidate (1-based) with total weight in [b1, b2).
    Getkey {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        b1: u64,
        #[arg(long)]
        b2: u64,
        #[arg(long)]
        r: String,
    },
    /// Recover a key from a noisy image and a plaintext/ciphertext pair.
    Search {
        #[arg(long)]
        noisy: String,
        #[arg(long)]
        plaintext: String,
        #[arg(long)]
        ciphertext: String,
        #[command(flatten)]
        cipher: CipherArgs,
        #[command(flatten)]
        enumeration: EnumArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: f64,
        /// The window holds about 2^e candidates.
        #[arg(long)]
        e: u32,
        /// classical, grover-sim or cost-only.
        #[arg(long, default_value = "classical")]
        backend: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Grover gate totals for a search over 2^e candidates.
    Estimate {
        #[arg(long)]
        cipher: Option<String>,
        #[arg(long)]
        e: Option<f64>,
        /// Include the embedded per-query gate counts of every cipher.
        #[arg(long)]
        table: bool,
        /// Also account the sub-interval schedule of this candidate table.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Success-rate sweep over beta and mu; prints CSV.
    Experiment {
        #[arg(long)]
        paramset: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated beta values.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        mus: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        es: Option<Vec<u32>>,
        #[arg(long)]
        chunk_bits: Option<usize>,
        #[arg(long)]
        eta: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The toy cipher.
    Lowmc {
        #[command(subcommand)]
        command: LowmcCommand,
    },
    /// The Picnic parameter sets.
    Paramsets,
}

#[derive(Subcommand)]
enum LowmcCommand {
    /// Random key pair for a parameter set.
    Keygen {
        #[arg(long)]
        paramset: String,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        instance_seed: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Enc {
        #[command(flatten)]
        cipher: CipherArgs,
        #[arg(long)]
        key: String,
        #[arg(long)]
        input: String,
    },
    Dec {
        #[command(flatten)]
        cipher: CipherArgs,
        #[arg(long)]
        key: String,
        #[arg(long)]
        input: String,
    },
    /// Alias of `paramsets`.
    List,
}

#[derive(Args)]
struct ChannelArgs {
    /// 0 -> 1 flip probability.
    #[arg(long)]
    alpha: f64,
    /// 1 -> 0 flip probability.
    #[arg(long)]
    beta: f64,
}

impl ChannelArgs {
    fn params(&self) -> Result<ChannelParams> {
        Ok(ChannelParams::new(self.alpha, self.beta)?)
    }
}

#[derive(Args)]
struct EnumArgs {
    /// Key length W in bits.
    #[arg(long)]
    bits: usize,
    #[arg(long)]
    chunk_bits: usize,
    #[arg(long)]
    eta: usize,
    #[arg(long)]
    mu: usize,
    /// Bits from this index on are known to be zero.
    #[arg(long)]
    free_bits: Option<usize>,
}

impl EnumArgs {
    fn params(&self, free_default: usize) -> Result<EnumerationParams> {
        Ok(EnumerationParams::with_free_bits(
            self.bits,
            self.chunk_bits,
            self.eta,
            self.mu,
            self.free_bits.unwrap_or(free_default.min(self.bits)),
        )?)
    }
}

#[derive(Args)]
struct CipherArgs {
    /// Take block size and S-box count from a parameter set.
    #[arg(long)]
    paramset: Option<String>,
    #[arg(long)]
    block_bits: Option<usize>,
    #[arg(long)]
    key_bits: Option<usize>,
    #[arg(long)]
    sboxes: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    rounds: usize,
    /// Seed of the cipher's matrices and constants.
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
}

impl CipherArgs {
    fn cipher(&self) -> Result<LowMc> {
        let params = match &self.paramset {
            Some(name) => lowmc::paramset(name)?.lowmc_params(self.rounds, self.instance_seed),
            None => {
                let n = self.block_bits.context("--paramset or --block-bits required")?;
                LowMcParams::new(
                    n,
                    self.key_bits.unwrap_or(n),
                    self.sboxes.unwrap_or(n / 3),
                    self.rounds,
                    self.instance_seed,
                )?
            }
        };
        Ok(LowMc::instantiate(params))
    }
}

fn hex(s: &str, len: Option<usize>) -> Result<BitString> {
    Ok(BitString::from_hex(s, len)?)
}

fn load_table(path: &PathBuf) -> Result<CandidateTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(CandidateTable::from_text(&text)?)
}

fn print(v: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("json values serialize")));
}

fn emit(text: &str) {
    // A closed pipe is not an error for a filter-style tool.
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn paramsets_json() -> Value {
    serde_json::to_value(lowmc::paramset_table()).expect("json values serialize")
}

/// `Ok(false)` means the command ran but found nothing.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Perturb {
            key,
            bits,
            channel: ch,
            seed,
        } => {
            let key = hex(&key, bits)?;
            let noisy = channel::perturb(&key, &ch.params()?, seed);
            let flips = key.xor(&noisy)?.count_ones();
            print(&json!({ "noisy": noisy.to_hex(), "bits": noisy.len(), "flips": flips }));
        }
        Command::Enumerate {
            noisy,
            enumeration,
            channel: ch,
            precision,
            out,
        } => {
            let params = enumeration.params(enumeration.bits)?;
            let noisy = hex(&noisy, Some(params.key_len))?;
            let table = generate_candidates(&noisy, &params, &ch.params()?, precision)?;
            let text = table.to_text();
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => emit(&text),
            }
        }
        Command::Rank { table, b1, b2 } => {
            let table = load_table(&table)?;
            let count = rankindex::rank(&table, WeightInterval::new(b1, b2)?)?;
            print(&json!({ "b1": b1, "b2": b2, "rank": count.to_string() }));
        }
        Command::Getkey { table, b1, b2, r } => {
            let table = load_table(&table)?;
            let r = r.parse().with_context(|| format!("invalid index {r}"))?;
            let matrix = rankindex::create(&table, WeightInterval::new(b1, b2)?)?;
            let key = rankindex::get_key(&table, &matrix, &r)?;
            let found = key.is_some();
            let weight = key.as_ref().and_then(|k| table.weight_of(k));
            print(&json!({
                "r": r.to_string(),
                "key": key.map(|k| k.to_hex()),
                "weight": weight,
            }));
            return Ok(found);
        }
        Command::Search {
            noisy,
            plaintext,
            ciphertext,
            cipher,
            enumeration,
            channel: ch,
            precision,
            e,
            backend,
            seed,
        } => {
            let cipher = cipher.cipher()?;
            let (n, k) = (cipher.params().block_bits, cipher.params().key_bits);
            let params = enumeration.params(k)?;
            let noisy = hex(&noisy, Some(params.key_len))?;
            let oracle = TestOracle::new(cipher, hex(&plaintext, Some(n))?, hex(&ciphertext, Some(n))?)?;
            let backend: Backend = backend.parse()?;
            let mut plan = SearchPlan::with_exponent(e, backend, params, ch.params()?, precision);
            plan.seed = seed;
            let outcome = search::qks(&noisy, &plan, &oracle)?;
            let found = outcome.key.is_some();
            print(&serde_json::to_value(&outcome)?);
            return Ok(found);
        }
        Command::Estimate {
            cipher,
            e,
            table,
            candidates,
        } => {
            let mut out = json!({});
            if table {
                out["table"] = serde_json::to_value(costs::CIPHER_CIRCUITS)?;
            }
            let gates = cipher.as_deref().map(builtin_gate_counts).transpose()?;
            if let Some(g) = &gates {
                out["cipher"] = json!(cipher);
                out["per_query"] = serde_json::to_value(g)?;
            }
            if cipher.is_some() || candidates.is_some() {
                let e = e.context("--e required")?;
                out["e"] = json!(e);
                if let (Some(id), Some(g)) = (&cipher, &gates) {
                    let cost = grover_cost(g, e)?;
                    out["cost"] = serde_json::to_value(cost)?;
                    if e.fract() == 0.0 {
                        let notes = costs::discrepancies(id, e as u32, &cost);
                        out["published"] = serde_json::to_value(costs::published_lowmc_totals(id, e as u32))?;
                        out["discrepancies"] = serde_json::to_value(notes)?;
                    }
                }
                if let Some(path) = candidates {
                    if e.fract() != 0.0 || e < 0.0 {
                        bail!("--candidates needs a whole exponent");
                    }
                    let table = load_table(&path)?;
                    let target = BigUint::one() << (e as u32);
                    out["window"] = serde_json::to_value(search::window_cost(&table, &target, gates.as_ref())?)?;
                }
            } else if !table {
                bail!("--cipher, --candidates or --table required");
            }
            print(&out);
        }
        Command::Experiment {
            paramset,
            trials,
            alpha,
            betas,
            mus,
            es,
            chunk_bits,
            eta,
            seed,
            out,
        } => {
            let mut spec = ExperimentSpec::for_paramset(lowmc::paramset(&paramset)?);
            spec.trials = trials;
            spec.base_seed = seed;
            if let Some(a) = alpha {
                spec.alpha = a;
            }
            if let Some(b) = betas {
                spec.beta_grid = b;
            }
            if let Some(m) = mus {
                spec.mu_grid = m;
            }
            if let Some(e) = es {
                spec.e_grid = e;
            }
            if let Some(w) = chunk_bits {
                spec.chunk_bits = w;
            }
            if let Some(h) = eta {
                spec.eta = h;
            }
            let csv = run_experiment(&spec)?.to_csv(&spec.e_grid)?;
            match out {
                Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => emit(&csv),
            }
        }
        Command::Lowmc { command } => match command {
            LowmcCommand::Keygen {
                paramset,
                rounds,
                instance_seed,
                seed,
            } => {
                let set = lowmc::paramset(&paramset)?;
                let cipher = LowMc::instantiate(set.lowmc_params(rounds, instance_seed));
                let pair = lowmc::keygen(&set, &cipher, seed)?;
                print(&json!({
                    "paramset": set.name,
                    "secret": pair.secret.to_hex(),
                    "plaintext": pair.plaintext.to_hex(),
                    "ciphertext": pair.ciphertext.to_hex(),
                }));
            }
            LowmcCommand::Enc { cipher, key, input } => crypt(&cipher, &key, &input, false)?,
            LowmcCommand::Dec { cipher, key, input } => crypt(&cipher, &key, &input, true)?,
            LowmcCommand::List => print(&paramsets_json()),
        },
        Command::Paramsets => print(&paramsets_json()),
    }
    Ok(true)
}

fn crypt(cipher: &CipherArgs, key: &str, input: &str, decrypt: bool) -> Result<()> {
    let cipher = cipher.cipher()?;
    let (n, k) = (cipher.params().block_bits, cipher.params().key_bits);
    let key = hex(key, Some(k))?;
    let input = hex(input, Some(n))?;
    let output = if decrypt {
        cipher.decrypt(&key, &input)?
    } else {
        cipher.encrypt(&key, &input)?
    };
    print(&json!({ "output": output.to_hex() }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
