mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use partext_core::{LanguageTag, SegmentKind};

/// Segmentation, alignment, linguistic tables, templates and MED dossiers.
#[derive(Debug, Parser)]
#[command(name = "partext", version)]
pub struct Cli {
    /// Tab-separated output, one record per line.
    #[arg(long, global = true)]
    pub porcelain: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a plain or marked-up text.
    Segment(SegmentArgs),
    /// Segment and align linguistic versions given as LANG=FILE.
    Align(AlignArgs),
    /// Add the aligned segments of a dossier or of LANG=FILE versions to a table.
    Harvest(HarvestArgs),
    /// Import or export TMX.
    #[command(subcommand)]
    Tmx(Exchange),
    /// Import or export CSV.
    #[command(subcommand)]
    Csv(Exchange),
    /// Fill a document template from linguistic tables.
    Generate(GenerateArgs),
    /// Pack, unpack, check and index MED dossiers.
    #[command(subcommand)]
    Med(MedCommand),
    /// Compare declared file languages with those marked in the content.
    Langcheck(LangcheckArgs),
    /// Run the translation-memory server.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Input file, or - for standard input.
    pub input: PathBuf,
    /// Language of a plain text. Marked-up input declares its own.
    #[arg(long)]
    pub lang: Option<LanguageTag>,
    /// Finest level to segment to.
    #[arg(long, default_value = "sentence")]
    pub level: SegmentKind,
    /// Treat the input as markup (default for .html, .htm, .xhtml, .xml).
    #[arg(long)]
    pub markup: bool,
    /// Sub-sentence separator character.
    #[arg(long)]
    pub separator: Option<char>,
    /// Print the segmentation sidecar instead of the segments.
    #[arg(long)]
    pub sidecar: bool,
}

#[derive(Debug, Args)]
pub struct VersionArgs {
    /// Versions as LANG=FILE.
    #[arg(value_name = "LANG=FILE")]
    pub versions: Vec<String>,
    #[arg(long, default_value = "sentence")]
    pub level: SegmentKind,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub versions: VersionArgs,
    /// Write the aligned texts as a dossier.
    #[arg(long, value_name = "FILE")]
    pub med: Option<PathBuf>,
    /// Dossier id.
    #[arg(long, default_value = "aligned")]
    pub id: String,
    /// Where the texts came from; harvested records link back to it.
    #[arg(long)]
    pub source: Option<String>,
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    /// Table store; created when missing.
    #[arg(long, value_name = "DIR")]
    pub table: PathBuf,
    /// Name for a new table (default: the directory name).
    #[arg(long)]
    pub name: Option<String>,
    /// Base URI for a new table.
    #[arg(long)]
    pub base: Option<String>,
    /// Harvest a dossier instead of LANG=FILE versions.
    #[arg(long, value_name = "FILE", conflicts_with = "versions")]
    pub med: Option<PathBuf>,
    #[command(flatten)]
    pub versions: VersionArgs,
    #[arg(long)]
    pub source: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Exchange {
    /// Read a file into a table store, replacing its contents.
    Import(ImportArgs),
    /// Write a table store out.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Input file, or - for standard input.
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub table: PathBuf,
    /// Table name (default: from the file, else the directory name).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub base: Option<String>,
    /// Column languages of a CSV file without a header row.
    #[arg(long, value_delimiter = ',')]
    pub langs: Vec<LanguageTag>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_name = "DIR")]
    pub table: PathBuf,
    /// Languages to export, in column order (default: all).
    #[arg(long, value_delimiter = ',')]
    pub langs: Vec<LanguageTag>,
    /// Output file (default: standard output).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_name = "FILE")]
    pub template: PathBuf,
    /// Default table for unqualified placeholders.
    #[arg(long, value_name = "DIR")]
    pub table: PathBuf,
    /// Further tables for qualified placeholders.
    #[arg(long = "with", value_name = "DIR")]
    pub with: Vec<PathBuf>,
    /// One version.
    #[arg(long, conflicts_with = "langs", required_unless_present = "langs")]
    pub lang: Option<LanguageTag>,
    /// Several aligned versions.
    #[arg(long, value_delimiter = ',')]
    pub langs: Vec<LanguageTag>,
    /// Write the versions as a dossier (with --langs).
    #[arg(long, value_name = "FILE", requires = "langs")]
    pub med: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum MedCommand {
    /// Pack a dossier directory into a .med file.
    Pack {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Unpack a .med file into a directory.
    Unpack {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a .med file or dossier directory; exits 1 on errors.
    Validate { path: PathBuf },
    /// Print the index page of a dossier.
    Index {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct LangcheckArgs {
    /// Marked-up file whose elements carry language attributes.
    pub input: PathBuf,
    /// Languages declared in the file metadata.
    #[arg(long, value_delimiter = ',', required = true)]
    pub declared: Vec<LanguageTag>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "PARTEXT_DATA_DIR", default_value = "partext-data")]
    pub data_dir: PathBuf,
    /// Table documents are matched against.
    #[arg(long, default_value = partext_server::DEFAULT_DATABASE)]
    pub database: String,
    #[arg(long, default_value_t = partext_server::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Register the table stored in DIR before serving.
    #[arg(long = "import", value_name = "DIR")]
    pub import: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
