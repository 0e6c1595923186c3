use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use treerepair::{coder, fixtures, xml_tree, Optimize, Options};

const USAGE: &str = "usage:
  treerepair compress [-max_rank k|inf] [-optimize edges|filesize] [-no_dag] <in.xml> [out.trp]
  treerepair decompress <in.trp> [out.xml]
  treerepair stats [-max_rank k|inf] [-optimize edges|filesize] [-no_dag] <in.xml>
  treerepair gen perfect|m|u <n> [out.xml]";

#[derive(Debug)]
struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn usage(msg: &str) -> CliError {
    CliError(format!("{msg}\n{USAGE}"))
}

/// Splits the switches from the positional arguments.
fn parse_flags(args: &[String]) -> Result<(Options, Vec<String>), CliError> {
    let mut opts = Options::default();
    let mut rest = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "-max_rank" => {
                let v = it.next().ok_or_else(|| usage("-max_rank needs a value"))?;
                opts.max_rank = match v.as_str() {
                    "inf" | "unlimited" => None,
                    k => Some(k.parse().map_err(|_| usage(&format!("bad -max_rank value {k:?}")))?),
                };
            }
            "-optimize" => {
                let v = it.next().ok_or_else(|| usage("-optimize needs a value"))?;
                opts.optimize = match v.as_str() {
                    "edges" => Optimize::Edges,
                    "filesize" => Optimize::FileSize,
                    other => return Err(usage(&format!("bad -optimize value {other:?}"))),
                };
            }
            "-no_dag" => opts.dag = false,
            s if s.starts_with('-') && s.len() > 1 => return Err(usage(&format!("unknown switch {s}"))),
            _ => rest.push(a.clone()),
        }
    }
    Ok((opts, rest))
}

fn read(path: &str) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError(format!("{path}: {e}")))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn output_path(pos: &[String], ext: &str) -> PathBuf {
    match pos.get(1) {
        Some(p) => PathBuf::from(p),
        None => Path::new(&pos[0]).with_extension(ext),
    }
}

fn compress(args: &[String]) -> Result<(), CliError> {
    let (opts, pos) = parse_flags(args)?;
    if pos.is_empty() || pos.len() > 2 {
        return Err(usage("compress takes an input and an optional output path"));
    }
    let xml = read(&pos[0])?;
    let out = treerepair::compress(&xml, &opts).map_err(|e| CliError(format!("{}: {e}", pos[0])))?;
    write(&output_path(&pos, "trp"), &out)
}

fn decompress(args: &[String]) -> Result<(), CliError> {
    let (_, pos) = parse_flags(args)?;
    if pos.is_empty() || pos.len() > 2 {
        return Err(usage("decompress takes an input and an optional output path"));
    }
    let data = read(&pos[0])?;
    let xml = treerepair::decompress(&data).map_err(|e| CliError(format!("{}: {e}", pos[0])))?;
    write(&output_path(&pos, "xml"), &xml)
}

fn stats(args: &[String]) -> Result<(), CliError> {
    let (opts, pos) = parse_flags(args)?;
    if pos.len() != 1 {
        return Err(usage("stats takes one input path"));
    }
    let xml = read(&pos[0])?;
    let started = Instant::now();
    let tree = xml_tree::parse_xml(&xml).map_err(|e| CliError(format!("{}: {e}", pos[0])))?;
    let g = treerepair::compress_tree(&tree, &opts);
    let out = coder::encode(&g)?;
    let ms = started.elapsed().as_secs_f64() * 1000.0;
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 * 100.0 };
    println!("input_bytes: {}", xml.len());
    println!("tree_edges: {}", tree.edges());
    println!("grammar_edges: {}", g.size());
    println!("nonterminals: {}", g.num_nonterminals());
    println!("edge_ratio_percent: {:.2}", pct(g.size(), tree.edges()));
    println!("output_bytes: {}", out.len());
    println!("filesize_ratio_percent: {:.2}", pct(out.len(), xml.len()));
    println!("time_ms: {ms:.1}");
    Ok(())
}

fn gen(args: &[String]) -> Result<(), CliError> {
    let [family, n, rest @ ..] = args else {
        return Err(usage("gen takes a family and a size"));
    };
    let n: u32 = n.parse().map_err(|_| usage(&format!("bad size {n:?}")))?;
    let tree = match (family.as_str(), n) {
        ("perfect", 1..=24) => fixtures::gen_perfect_binary(n),
        ("m", 1..=4) => fixtures::gen_m(n),
        ("u", 3..=24) => fixtures::gen_u(n),
        ("perfect" | "m" | "u", _) => return Err(usage(&format!("size {n} out of range for {family}"))),
        _ => return Err(usage(&format!("unknown family {family:?}"))),
    };
    let xml = xml_tree::serialize_xml(&tree)?;
    match rest {
        [] => {
            use std::io::Write;
            std::io::stdout().write_all(&xml)?;
            Ok(())
        }
        [path] => write(Path::new(path), &xml),
        _ => Err(usage("too many arguments")),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match args.first().map(String::as_str) {
        Some("compress") => compress(&args[1..]),
        Some("decompress") => decompress(&args[1..]),
        Some("stats") => stats(&args[1..]),
        Some("gen") => gen(&args[1..]),
        Some("-h" | "--help" | "help") => {
            println!("{USAGE}");
            Ok(())
        }
        _ => Err(usage("missing or unknown command")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError(msg)) => {
            eprintln!("treerepair: {msg}");
            ExitCode::FAILURE
        }
    }
}
