//! `syp`: BPMN model to playable narrative, from the command line.
//!
//! Exit codes: 0 success, 1 incomplete or mismatching result, 2 input error.

mod play;

use std::fs;
use std::io::{self, IsTerminal};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;

use syp_core::beat_sheet::sentences_csv;
use syp_core::conformance::{all_paths, random_choices, vector_file};
use syp_core::metrics::metrics_csv;
use syp_core::{
    check_completeness, compile_narrative, emit_ink, extract_sentences, load_model, score_sheet, script_sentences,
    summarize, BeatSheet, CompiledNarrative, Mode, Numbering, PipelineError, ProcessModel, SentenceList, Story,
    VerbLexicon,
};

#[derive(Parser)]
#[command(name = "syp", version, about = "Turn BPMN process models into interactive narratives")]
struct Cli {
    /// Validation mode.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Strict)]
    mode: ModeArg,
    /// Beat-sheet numbering.
    #[arg(long, global = true, value_enum, default_value_t = NumberingArg::Dfs)]
    numbering: NumberingArg,
    /// Verb lexicon JSON overriding the default verbs.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Directory for output files [default: current directory].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Lenient,
}

#[derive(Clone, Copy, ValueEnum)]
enum NumberingArg {
    Dfs,
    List,
}

#[derive(Subcommand)]
enum Command {
    /// Extract one sentence per flow node: sentences.json and table.csv.
    Extract { bpmn: PathBuf },
    /// Order sentences into a beat sheet: beatsheet.json and beatsheet.csv.
    Script {
        bpmn: PathBuf,
        /// Sentences to use instead of freshly extracted ones (e.g. refined by hand).
        sentences: Option<PathBuf>,
    },
    /// Compile a beat sheet: story.ink and story.json.
    Compile { beatsheet: PathBuf },
    /// Play a compiled story in the terminal.
    Play {
        story: PathBuf,
        /// Save file for the save/reload commands.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Check that a beat sheet covers every reachable flow node.
    Check { bpmn: PathBuf, beatsheet: PathBuf },
    /// Score candidate beat sheets against a gold sheet (the last path).
    Score {
        #[arg(required = true, num_args = 2.., value_names = ["CANDIDATE", "GOLD"])]
        paths: Vec<PathBuf>,
    },
    /// Export conformance vectors for a story: vectors.json.
    Vectors {
        story: PathBuf,
        /// Cut choice sequences after this many decisions.
        #[arg(long, default_value_t = 12)]
        max_choices: usize,
        /// Maximum number of exhaustive sequences.
        #[arg(long, default_value_t = 200)]
        limit: usize,
        /// Additional random sequences.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// A failed command and its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn result(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

struct Config {
    mode: Mode,
    numbering: Numbering,
    lexicon: VerbLexicon,
    out: Option<PathBuf>,
    color: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let lexicon = match &cli.lexicon {
        Some(path) => VerbLexicon::from_json(&read_text(path)?)
            .map_err(|e| Failure::input(format!("{}: invalid lexicon: {e}", path.display())))?,
        None => VerbLexicon::default(),
    };
    let config = Config {
        mode: match cli.mode {
            ModeArg::Strict => Mode::Strict,
            ModeArg::Lenient => Mode::Lenient,
        },
        numbering: match cli.numbering {
            NumberingArg::Dfs => Numbering::Dfs,
            NumberingArg::List => Numbering::List,
        },
        lexicon,
        out: cli.out,
        color: std::env::var_os("SYP_NO_COLOR").is_none() && io::stdout().is_terminal(),
    };
    match cli.command {
        Command::Extract { bpmn } => cmd_extract(&bpmn, &config),
        Command::Script { bpmn, sentences } => cmd_script(&bpmn, sentences.as_deref(), &config),
        Command::Compile { beatsheet } => cmd_compile(&beatsheet, &config),
        Command::Play { story, save } => {
            let save = save.unwrap_or_else(|| story.with_extension("save.json"));
            cmd_play(&story, &save, &config)
        }
        Command::Check { bpmn, beatsheet } => cmd_check(&bpmn, &beatsheet, &config),
        Command::Score { mut paths } => {
            let gold = paths.pop().expect("clap enforces two paths");
            cmd_score(&paths, &gold, &config)
        }
        Command::Vectors { story, max_choices, limit, random, seed } => {
            cmd_vectors(&story, max_choices, limit, random, seed, &config)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Failure::input(format!("file not found: {}", path.display())),
        _ => Failure::input(format!("{}: {e}", path.display())),
    })
}

fn write_outputs(config: &Config, files: &[(&str, &str)]) -> CmdResult {
    let dir = config.out.as_deref().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn load(path: &Path, config: &Config) -> Result<ProcessModel, Failure> {
    let xml = read_text(path)?;
    match load_model(xml.as_bytes(), config.mode) {
        Ok((model, report)) => {
            for d in &report.diagnostics {
                eprintln!("{d}");
            }
            Ok(model)
        }
        Err(PipelineError::Invalid(report)) => {
            for d in &report.diagnostics {
                eprintln!("{d}");
            }
            Err(Failure::input(format!("{}: model failed validation", path.display())))
        }
        Err(e) => Err(Failure::input(format!("{}: {e}", path.display()))),
    }
}

fn cmd_extract(bpmn: &Path, config: &Config) -> CmdResult {
    let model = load(bpmn, config)?;
    let sentences = extract_sentences(&model, &config.lexicon).map_err(|e| Failure::input(e.to_string()))?;
    let table = sentences_csv(&sentences);
    let list = SentenceList { process_id: model.process_id, sentences };
    write_outputs(config, &[("sentences.json", &list.to_json()), ("table.csv", &table)])
}

fn cmd_script(bpmn: &Path, sentences: Option<&Path>, config: &Config) -> CmdResult {
    let model = load(bpmn, config)?;
    let sentences = match sentences {
        Some(path) => {
            let list = SentenceList::from_json(&read_text(path)?)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            if list.process_id != model.process_id {
                return Err(Failure::input(format!(
                    "{}: sentences are for process {}, model is {}",
                    path.display(),
                    list.process_id,
                    model.process_id
                )));
            }
            list.sentences
        }
        None => extract_sentences(&model, &config.lexicon).map_err(|e| Failure::input(e.to_string()))?,
    };
    let sheet = script_sentences(&model, &sentences, config.numbering).map_err(|e| Failure::input(e.to_string()))?;
    write_outputs(config, &[("beatsheet.json", &sheet.to_json()), ("beatsheet.csv", &sheet.to_csv())])
}

fn read_sheet(path: &Path) -> Result<BeatSheet, Failure> {
    BeatSheet::from_json(&read_text(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_story(path: &Path) -> Result<Story, Failure> {
    let narrative = CompiledNarrative::from_json(&read_text(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Story::new(narrative).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_compile(beatsheet: &Path, config: &Config) -> CmdResult {
    let sheet = read_sheet(beatsheet)?;
    let narrative = compile_narrative(&sheet).map_err(|e| Failure::input(format!("{}: {e}", beatsheet.display())))?;
    write_outputs(config, &[("story.ink", &emit_ink(&narrative)), ("story.json", &narrative.to_json())])
}

fn cmd_play(story_path: &Path, save: &Path, config: &Config) -> CmdResult {
    let story = read_story(story_path)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    play::run(&story, save, stdin.lock(), stdout.lock(), config.color)
        .map_err(|e| Failure::input(format!("terminal: {e}")))
}

fn cmd_check(bpmn: &Path, beatsheet: &Path, config: &Config) -> CmdResult {
    let model = load(bpmn, config)?;
    let sheet = read_sheet(beatsheet)?;
    let report = check_completeness(&model, &sheet);
    println!("expected {} entries, found {}", report.expected, report.found);
    if report.is_complete() {
        println!("complete");
        Ok(())
    } else {
        for id in &report.missing_node_ids {
            println!("missing {id}");
        }
        Err(Failure::result(format!("{} flow node(s) have no entry", report.missing_node_ids.len())))
    }
}

fn cmd_score(candidates: &[PathBuf], gold: &Path, config: &Config) -> CmdResult {
    let gold_sheet = read_sheet(gold)?;
    let mut rows = Vec::new();
    for path in candidates {
        let sheet = read_sheet(path)?;
        let report =
            score_sheet(&sheet, &gold_sheet).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        for m in &report.mismatches {
            eprintln!("{name}: entry {}: {}", m.entry_id, m.reason);
        }
        rows.push((name, report));
    }
    let csv = metrics_csv(rows.iter().map(|(n, r)| (n.as_str(), r)));
    print!("{csv}");
    if rows.len() > 1 {
        let reports: Vec<_> = rows.iter().map(|(_, r)| r.clone()).collect();
        let s = summarize(&reports).expect("non-empty");
        eprintln!("mean mq1 {:.2}, mq2 {:.2}", s.mq1.mean, s.mq2.mean);
        eprintln!("mode mq1 {:.2}, mq2 {:.2}", s.mq1.mode, s.mq2.mode);
        eprintln!("sd   mq1 {:.2}, mq2 {:.2}", s.mq1.std_dev, s.mq2.std_dev);
    }
    if config.out.is_some() {
        write_outputs(config, &[("metrics.csv", &csv)])?;
    }
    let imperfect = rows.iter().filter(|(_, r)| r.qtd_corr != r.qtd_exp || r.qtd_ext != r.qtd_exp).count();
    if imperfect > 0 {
        return Err(Failure::result(format!("{imperfect} sheet(s) differ from the gold sheet")));
    }
    Ok(())
}

fn cmd_vectors(story: &Path, max_choices: usize, limit: usize, random: usize, seed: u64, config: &Config) -> CmdResult {
    let story = read_story(story)?;
    let mut sequences = all_paths(&story, max_choices, limit);
    let mut rng = StdRng::seed_from_u64(seed);
    sequences.extend((0..random).map(|_| random_choices(&story, &mut rng, max_choices)));
    write_outputs(config, &[("vectors.json", &vector_file(&story, &sequences).to_json())])
}
