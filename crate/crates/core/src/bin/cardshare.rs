//! `cardshare`: run, analyze and verify shifted projection sessions.
//!
//! Exit codes: 0 success, 1 I/O or usage error, 2 a safety or verification
//! check failed, 3 invalid parameters, 4 malformed transcript or deal file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cardshare::eavesdropper::probability_report;
use cardshare::fixtures::{self, PHI};
use cardshare::harness::{new_session, verify, Session};
use cardshare::params::{even_split_tau, parameter_rows, render_table};
use cardshare::protocol::{standard_deck, validate_suitable, Agent, Deal, ParamsError, SuitableParams, Variant};
use cardshare::transcript::{DealRecord, Transcript, TranscriptError};

#[derive(Parser)]
#[command(name = "cardshare", version, about = "Perfectly safe card-deal aggregation via shifted projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print balanced suitable parameters for a number of agents.
    Params {
        /// Number of agents besides Alice.
        #[arg(long)]
        agents: usize,
        /// Only this dimension.
        #[arg(long)]
        d: Option<usize>,
        /// Largest dimension listed when --d is absent.
        #[arg(long, default_value_t = 6)]
        max_d: usize,
        #[arg(long)]
        json: bool,
    },
    /// Deal a deck at random and write the deal file.
    Deal {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full session and write its public transcript.
    Run {
        #[command(flatten)]
        setup: Setup,
        /// Use this deal instead of dealing at random.
        #[arg(long)]
        deal: Option<PathBuf>,
        /// Also write the true deal here.
        #[arg(long)]
        deal_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "shifted")]
        variant: VariantArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the eavesdropper's posteriors from a transcript.
    Analyze {
        transcript: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Skip the card table.
        #[arg(long)]
        quiet: bool,
    },
    /// Check a transcript against a deal: legality and informativity.
    Verify {
        transcript: PathBuf,
        #[arg(long)]
        deal: PathBuf,
    },
    /// Replay the 16-card example on the plane over F_4.
    Demo,
}

#[derive(Args)]
struct Setup {
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    q: u64,
    #[arg(long)]
    d: usize,
    /// Hand sizes, Alice first. Defaults to an even split among the others.
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<usize>>,
    #[arg(long, env = "CARDSHARE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Shifted,
    Unshifted,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Shifted => Variant::Shifted,
            VariantArg::Unshifted => Variant::Unshifted,
        }
    }
}

enum Failure {
    Io(String),
    CheckFailed(String),
    Params(String),
    Malformed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::CheckFailed(_) => 2,
            Failure::Params(_) => 3,
            Failure::Malformed(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::CheckFailed(m) | Failure::Params(m) | Failure::Malformed(m) => m,
        }
    }
}

impl From<ParamsError> for Failure {
    fn from(e: ParamsError) -> Self {
        Failure::Params(e.to_string())
    }
}

impl From<TranscriptError> for Failure {
    fn from(e: TranscriptError) -> Self {
        match e {
            TranscriptError::Params(p) => Failure::Params(p.to_string()),
            e => Failure::Malformed(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, format!("{contents}\n")).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

impl Setup {
    fn params(&self) -> Result<SuitableParams, Failure> {
        let tau = match &self.tau {
            Some(t) => t.clone(),
            None => {
                // Everything but τ is checked before splitting the deck.
                match validate_suitable(self.agents, self.q, self.d, &[]) {
                    Err(ParamsError::AgentCountMismatch { .. }) => {}
                    Err(e) => return Err(e.into()),
                    Ok(_) => unreachable!("an empty distribution type is never suitable"),
                }
                even_split_tau(self.agents, self.q, self.d)
            }
        };
        Ok(validate_suitable(self.agents, self.q, self.d, &tau)?)
    }
}

fn run() -> Result<(), Failure> {
    match Cli::parse().command {
        Command::Params { agents, d, max_d, json } => {
            if agents < 2 {
                return Err(ParamsError::TooFewAgents(agents).into());
            }
            let rows = match d {
                Some(d) => parameter_rows(agents, [d]),
                None => parameter_rows(agents, 2..=max_d),
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
            } else {
                print!("{}", render_table(&rows));
            }
        }
        Command::Deal { setup, out } => {
            let params = setup.params()?;
            let session = new_session(&params, &standard_deck(params.deck_size()), setup.seed, Variant::Shifted)
                .map_err(|e| Failure::Params(e.to_string()))?;
            write(&out, &DealRecord::from_deal(session.deal()).to_json())?;
        }
        Command::Run { setup, deal, deal_out, variant, out } => {
            let params = setup.params()?;
            let variant = variant.into();
            let mut session = match deal {
                Some(path) => {
                    let deal = DealRecord::from_json(&read(&path)?)?.to_deal()?;
                    Session::with_deal(&params, deal, setup.seed, variant)
                }
                None => new_session(&params, &standard_deck(params.deck_size()), setup.seed, variant),
            }
            .map_err(|e| Failure::Malformed(e.to_string()))?;
            session.run_to_completion().map_err(|e| Failure::Malformed(e.to_string()))?;
            write(&out, &session.transcript().to_json())?;
            if let Some(path) = deal_out {
                write(&path, &DealRecord::from_deal(session.deal()).to_json())?;
            }
            println!("wrote {} tokens to {}", session.log().len(), out.display());
        }
        Command::Analyze { transcript, report, quiet } => {
            let t = Transcript::from_json(&read(&transcript)?)?;
            let params = t.params()?;
            let run = t.run()?;
            let safety =
                probability_report(&run, &params, t.variant).map_err(|e| Failure::Malformed(e.to_string()))?;
            if !quiet {
                print!("{}", safety.render_table());
            } else {
                println!("weakly safe: {}\nperfectly safe: {}", safety.weakly_safe, safety.perfectly_safe);
            }
            if let Some(path) = report {
                write(&path, &serde_json::to_string_pretty(&safety).expect("reports serialize"))?;
            }
            if !safety.perfectly_safe {
                return Err(Failure::CheckFailed("run is not perfectly safe".into()));
            }
        }
        Command::Verify { transcript, deal } => {
            let t = Transcript::from_json(&read(&transcript)?)?;
            let params = t.params()?;
            let run = t.run()?;
            let deal = DealRecord::from_json(&read(&deal)?)?.to_deal()?;
            let v = verify(&params, t.variant, &run, &deal);
            match &v.execution {
                Ok(()) => println!("execution: valid"),
                Err(e) => println!("execution: invalid ({e})"),
            }
            if v.uninformed.is_empty() {
                println!("informative: every agent reconstructs the deal");
            } else {
                let names: Vec<String> = v.uninformed.iter().map(Agent::to_string).collect();
                println!("informative: no ({} cannot reconstruct the deal)", names.join(", "));
            }
            if !v.passed() {
                return Err(Failure::CheckFailed("verification failed".into()));
            }
        }
        Command::Demo => demo(),
    }
    Ok(())
}

fn element_name(v: u32) -> &'static str {
    ["0", "1", "φ", "φ²"][v as usize]
}

fn set_name(points: &std::collections::BTreeSet<cardshare::Point>) -> String {
    let names: Vec<&str> = points.iter().map(|p| element_name(p.coords()[0])).collect();
    format!("{{{}}}", names.join(", "))
}

/// The plane with rows y = φ², φ, 1, 0 from the top.
fn grid(deal: &Deal) -> String {
    let mut out = String::new();
    for y in (0..4).rev() {
        out.push_str(&format!("{:>3} ", element_name(y)));
        for x in 0..4 {
            let symbol = match deal.holder(fixtures::card_at(x, y)) {
                Some(Agent::Alice) => "♦",
                Some(Agent::Bob(1)) => "♠",
                _ => "♣",
            };
            out.push_str(&format!("{symbol:>3}"));
        }
        out.push('\n');
    }
    out.push_str("    ");
    for x in 0..4 {
        out.push_str(&format!("{:>3}", element_name(x)));
    }
    out.push('\n');
    out
}

fn sixteenths(p: cardshare::eavesdropper::Probability) -> String {
    format!("{}/16", p.numer() * 16 / p.denom())
}

fn demo() {
    let params = fixtures::worked_example_params();
    let deal = fixtures::worked_example_deal();
    let origin = fixtures::card_at(0, 0);
    println!("Deal of type (12,2,2): Alice ♦, Bob ♠, Cath ♣ on F_4^2; Alice holds the complement of y = x\n");
    print!("{}", grid(&deal));

    for variant in [Variant::Unshifted, Variant::Shifted] {
        let run = fixtures::worked_example_run(variant);
        let sets: Vec<_> = run.projections().collect();
        println!("\n{variant} announcements: Bob {}, Cath {}", set_name(sets[0]), set_name(sets[1]));
        let report = probability_report(&run, &params, variant).expect("fixture run is well formed");
        let p = |a| sixteenths(report.probability(origin, a).expect("card present"));
        println!(
            "Eve's probabilities for the card at (0,0): Alice {}, Bob {}, Cath {}",
            p(Agent::Alice),
            p(Agent::Bob(1)),
            p(Agent::Bob(2))
        );
        println!("weakly safe: {}, perfectly safe: {}", report.weakly_safe, report.perfectly_safe);
    }

    let run = fixtures::worked_example_run(Variant::Shifted);
    let alt = cardshare::eavesdropper::candidate_deal(&run, &fixtures::phi_line(), &params, Variant::Shifted)
        .expect("fixture run is well formed");
    println!("\nA deal Eve cannot rule out: Bob and Cath on y = φx (slope {}), Bob holding (0,0)\n", element_name(PHI));
    print!("{}", grid(&alt.deal));
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
