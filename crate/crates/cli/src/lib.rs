//! Command line front end and HTTP service for `dualtile`.

pub mod ops;
pub mod server;

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use dualtile::packing::{
    check_double_conditions, enumerate_packings, make_domino_string, make_double_domino, no_shift2_complete_string,
    pack,
};
use dualtile::pipeline::{Progress, Scorer};
use dualtile::project::Project;
use dualtile::render::PlaneRegion;
use dualtile::{ColorCount, CompletenessReport, CrossTileId, WangTileId};

use crate::ops::RenderTarget;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dualtile", version, about = "Content-aware Wang and Dual Wang tile sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a complete domino string, or the double template with --double.
    Domino {
        #[arg(long)]
        colors: u32,
        #[arg(long)]
        double: bool,
    },
    /// Write a Dual Wang tile packing as JSON.
    Pack {
        #[arg(long)]
        colors: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a packing grid and its complement are complete.
    ValidatePacking { grid: PathBuf },
    /// Count every packing by exhaustive search.
    EnumeratePackings {
        #[arg(long)]
        colors: u32,
        #[arg(long)]
        count_only: bool,
        /// Run for more than two colors.
        #[arg(long)]
        allow_large: bool,
    },
    /// Whether no complete domino string also has complete distance-two pairs.
    NoShift2 {
        #[arg(long)]
        colors: u32,
        #[arg(long)]
        allow_large: bool,
    },
    /// Generate the project's tile set.
    Generate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-synthesize one tile and its dependents.
    Regenerate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Only mark dependents stale.
        #[arg(long)]
        defer: bool,
    },
    /// Render a tiling, or a window of the infinite plane with --infinite.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = server::parse_dims)]
        tiles: Option<(usize, usize)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, requires = "region")]
        infinite: bool,
        /// x,y,w,h in texels.
        #[arg(long, value_parser = parse_region, allow_hyphen_values = true)]
        region: Option<PlaneRegion>,
        /// Synthesize tiles per position instead of reading the saved set.
        #[arg(long)]
        on_demand: bool,
    },
    /// Pack a Dual set into one seamless atlas texture.
    Atlas {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved tile set.
    Score {
        #[arg(long)]
        tileset: PathBuf,
        #[arg(long)]
        scorer: Scorer,
        /// Project used to rebuild canvases for seam_energy.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn parse_region(text: &str) -> Result<PlaneRegion, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected x,y,w,h, got {text:?}"));
    }
    let x: i64 = parts[0].parse().map_err(|_| format!("bad x in {text:?}"))?;
    let y: i64 = parts[1].parse().map_err(|_| format!("bad y in {text:?}"))?;
    let w: usize = parts[2].parse().map_err(|_| format!("bad width in {text:?}"))?;
    let h: usize = parts[3].parse().map_err(|_| format!("bad height in {text:?}"))?;
    if w == 0 || h == 0 {
        return Err("region must not be empty".into());
    }
    Ok(PlaneRegion::new(x, y, w, h))
}

/// A failed command: its exit code and the message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<dualtile::Error> for Failure {
    fn from(e: dualtile::Error) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn colors(c: u32) -> Result<ColorCount, Failure> {
    ColorCount::new(c).map_err(|e| usage(e.to_string()))
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn out_err(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: e.to_string(),
    }
}

fn report_lines(name: &str, r: &CompletenessReport, label: impl Fn(usize) -> String) -> Vec<String> {
    let mut lines = Vec::new();
    if !r.missing.is_empty() {
        let ids: Vec<String> = r.missing.iter().map(|&i| label(i)).collect();
        lines.push(format!("{name}: missing {} [{}]", ids.len(), ids.join(" ")));
    }
    if !r.duplicated.is_empty() {
        let ids: Vec<String> = r.duplicated.iter().map(|&(i, n)| format!("{}x{n}", label(i))).collect();
        lines.push(format!("{name}: duplicated {} [{}]", ids.len(), ids.join(" ")));
    }
    lines
}

/// Runs one command, writing its output to `out`.
pub fn execute(command: Command, out: &mut impl Write) -> Result<(), Failure> {
    match command {
        Command::Domino { colors: c, double } => {
            let c = colors(c)?;
            if double {
                let d = make_double_domino(c)?;
                let fmt = |row: &[(dualtile::EdgeColor, dualtile::EdgeColor)]| row.iter().map(|(a, b)| format!("{a}{b}")).collect::<Vec<_>>().join(" ");
                writeln!(out, "d0: {}", fmt(&d.d0)).map_err(out_err)?;
                writeln!(out, "d1: {}", fmt(&d.d1)).map_err(out_err)?;
                let conds = check_double_conditions(&d);
                let flags: Vec<&str> = conds.iter().map(|r| if r.complete { "ok" } else { "fail" }).collect();
                writeln!(out, "conditions: {}", flags.join(" ")).map_err(out_err)?;
                if !conds.iter().all(|r| r.complete) {
                    return Err(Failure {
                        code: EXIT_INVALID,
                        message: "double domino template fails its conditions".into(),
                    });
                }
            } else {
                let s = make_domino_string(c);
                let seq: Vec<String> = s.seq.iter().map(|c| c.to_string()).collect();
                writeln!(out, "{}", seq.join(" ")).map_err(out_err)?;
            }
        }
        Command::Pack { colors: c, out: path } => {
            let grid = pack(colors(c)?)?;
            let text = grid.to_json() + "\n";
            match path {
                Some(p) => std::fs::write(&p, text).map_err(|source| dualtile::Error::Io { path: p, source })?,
                None => out.write_all(text.as_bytes()).map_err(out_err)?,
            }
        }
        Command::ValidatePacking { grid } => {
            let g = ops::load_packing(&grid)?;
            let c = g.colors();
            let v = dualtile::packing::validate_packing(&g)?;
            if v.valid {
                writeln!(out, "valid: {} tiles, complement complete", c.tile_count()).map_err(out_err)?;
            } else {
                let mut lines = report_lines("tiles", &v.tiling, |i| WangTileId::from_index(c, i).unwrap().to_string());
                lines.extend(report_lines("complement", &v.complement, |i| {
                    CrossTileId::from_index(c, i).unwrap().to_string()
                }));
                return Err(Failure {
                    code: EXIT_INVALID,
                    message: format!("not a packing\n{}", lines.join("\n")),
                });
            }
        }
        Command::EnumeratePackings {
            colors: c,
            count_only,
            allow_large,
        } => {
            let s = enumerate_packings(colors(c)?, allow_large, |_| {})?;
            if count_only {
                writeln!(out, "{}", s.labeled).map_err(out_err)?;
            } else {
                for (name, v) in [
                    ("labeled packings", s.labeled),
                    ("complete tilings", s.complete_tilings),
                    ("up to translation", s.up_to_translation),
                    ("up to translation and color permutation", s.up_to_translation_and_colors),
                    ("up to translation and square symmetries", s.up_to_translation_and_dihedral),
                    ("up to all symmetries", s.up_to_all),
                ] {
                    writeln!(out, "{name}: {v}").map_err(out_err)?;
                }
            }
        }
        Command::NoShift2 { colors: c, allow_large } => {
            let r = no_shift2_complete_string(colors(c)?, allow_large)?;
            writeln!(out, "{r}").map_err(out_err)?;
        }
        Command::Generate { config } => {
            let project = Project::load(&config)?;
            let set = ops::generate(&project, &Progress::default())?;
            let c = &set.counters;
            writeln!(
                out,
                "{} tiles in {}: {} inpaints, {} backend calls, {} resumed",
                set.tiles.values().map(Vec::len).sum::<usize>(),
                project.tileset_path().display(),
                c.inpaints,
                c.backend_calls,
                c.resumed
            )
            .map_err(out_err)?;
        }
        Command::Regenerate { config, id, seed, defer } => {
            let project = Project::load(&config)?;
            let r = ops::regenerate(&project, &id, seed, defer)?;
            let names = |v: &[dualtile::pipeline::TileKey]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
            writeln!(out, "seed {}", r.seed).map_err(out_err)?;
            writeln!(out, "regenerated: {}", names(&r.report.regenerated)).map_err(out_err)?;
            if !r.report.stale.is_empty() {
                writeln!(out, "stale: {}", names(&r.report.stale)).map_err(out_err)?;
            }
        }
        Command::Render {
            config,
            tiles,
            seed,
            out: path,
            infinite,
            region,
            on_demand,
        } => {
            let target = match (infinite, region, tiles) {
                (true, Some(r), _) => RenderTarget::Region(r),
                (false, None, Some((width, height))) => RenderTarget::Tiles { width, height },
                (false, Some(_), _) => return Err(usage("--region needs --infinite")),
                _ => return Err(usage("render needs --tiles WxH or --infinite --region x,y,w,h")),
            };
            let project = Project::load(&config)?;
            let r = ops::render(&project, target, seed, on_demand)?;
            r.image.save_png(&path)?;
            writeln!(out, "{}x{} -> {}", r.image.width(), r.image.height(), path.display()).map_err(out_err)?;
        }
        Command::Atlas { config, out: path } => {
            let project = Project::load(&config)?;
            let (atlas, layout) = ops::atlas(&project, &path)?;
            writeln!(
                out,
                "{}x{} atlas with {} diamonds -> {} ({})",
                atlas.layout.width,
                atlas.layout.height,
                atlas.layout.entries.len(),
                path.display(),
                layout.display()
            )
            .map_err(out_err)?;
        }
        Command::Score { tileset, scorer, config } => {
            let project = config.map(Project::load).transpose()?;
            let r = ops::score_tileset(&tileset, scorer, project.as_ref())?;
            writeln!(out, "{} {} ({})", r.scorer, r.value, orientation_name(r.orientation)).map_err(out_err)?;
        }
        Command::Serve { config, port, host } => {
            let project = Project::load(&config)?;
            let rt = tokio::runtime::Runtime::new().map_err(out_err)?;
            rt.block_on(server::serve(project, SocketAddr::new(host, port))).map_err(out_err)?;
        }
    }
    Ok(())
}

fn orientation_name(o: dualtile::pipeline::Orientation) -> String {
    serde_json::to_value(o).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}
