mod common;

use std::process::Command;

use common::{books, BOOKS_XML};
use treerepair::coder::{self, HeaderValue};
use treerepair::xml_tree::{parse_xml, serialize_xml, Characteristic};
use treerepair::{compress, compress_tree, decoder, decompress, Grammar, Optimize, Options};

const GOLDEN_TRP: &[u8] = include_bytes!("data/books.trp");

const BOOKS_FINAL: &str = "A1 -> author^01(title^01(isbn^00))\n\
    A2(y) -> book^11(A1,y)\n\
    S -> books^10(A2(A2(A2(A2(book^10(A1))))))\n";

fn worked_example_options() -> Options {
    Options { max_rank: Some(99), optimize: Optimize::Edges, dag: false }
}

fn books_grammar() -> Grammar {
    compress_tree(&books(), &worked_example_options())
}

#[test]
fn books_terminal_ids_follow_labeling_order() {
    let t = books();
    let names: Vec<String> = t.alphabet.iter().map(|(_, term)| term.to_string()).collect();
    assert_eq!(names, ["books^10", "isbn^00", "title^01", "author^01", "book^10", "book^11"]);
    assert_eq!(t.edges(), 20);
}

#[test]
fn books_final_grammar() {
    let g = books_grammar();
    assert_eq!(g.size(), 10);
    assert_eq!(g.num_nonterminals(), 3);
    assert_eq!(g.canonical_text(), BOOKS_FINAL);
}

#[test]
fn books_dag_mode_gives_same_grammar() {
    let opts = Options { dag: true, ..worked_example_options() };
    assert_eq!(compress_tree(&books(), &opts).canonical_text(), BOOKS_FINAL);
}

#[test]
fn books_value_sequence() {
    let g = books_grammar();
    let ids = coder::assign_ids(&g).unwrap();
    let v = coder::serialize_values(&g, &ids).unwrap();
    use HeaderValue::{Int, Tag};
    let expected = vec![
        Int(6),
        Int(2),
        Tag(Characteristic::NoChildren),
        Int(1),
        Int(2),
        Tag(Characteristic::NoLeftChild),
        Int(2),
        Int(3),
        Int(4),
        Tag(Characteristic::NoRightChild),
        Int(2),
        Int(1),
        Int(5),
    ];
    assert_eq!(v.header, expected);
    assert_eq!(v.names, b"books\x03isbn\x03title\x03author\x03book\x03book\x03");
    assert_eq!(v.productions, [4, 3, 2, 6, 8, 7]);
    assert_eq!(v.start, [1, 9, 9, 9, 9, 5, 8]);
}

#[test]
fn golden_file_encode() {
    let bytes = coder::encode(&books_grammar()).unwrap();
    assert_eq!(bytes, GOLDEN_TRP);
}

#[test]
fn golden_file_decode() {
    let g = decoder::decode(GOLDEN_TRP).unwrap();
    assert_eq!(g.canonical_text(), BOOKS_FINAL);
    assert!(g.unfold().unwrap().same_as(&books()));
}

#[test]
fn golden_file_corruption_never_panics() {
    for bit in 0..GOLDEN_TRP.len() * 8 {
        let mut bytes = GOLDEN_TRP.to_vec();
        bytes[bit / 8] ^= 0x80 >> (bit % 8);
        if let Ok(g) = decoder::decode(&bytes) {
            // a flip can land on an equivalent code; the result must still unfold
            let _ = g.unfold_with_cap(1 << 20);
        }
    }
}

#[test]
fn xml_roundtrip_through_bytes() {
    for opts in common::all_options() {
        let packed = compress(BOOKS_XML, &opts).unwrap();
        let xml = decompress(&packed).unwrap();
        assert!(parse_xml(&xml).unwrap().same_as(&books()), "{opts:?}");
    }
}

#[test]
fn tiny_document() {
    let packed = compress(b"<a><b/></a>", &Options::default()).unwrap();
    assert_eq!(decompress(&packed).unwrap(), b"<a><b/></a>");
    assert!(compress(b"<a/>", &Options::default()).is_err());
}

#[test]
fn text_and_attributes_are_dropped() {
    let xml = br#"<?xml version="1.0"?><!-- c --><r x="1">hi<s>t</s><![CDATA[z]]></r>"#;
    let packed = compress(xml, &Options::default()).unwrap();
    assert_eq!(decompress(&packed).unwrap(), b"<r><s/></r>");
}

#[test]
fn deterministic_output() {
    let xml = common::random_xml(7, 3000, 4);
    let a = compress(xml.as_bytes(), &Options::default()).unwrap();
    let b = compress(xml.as_bytes(), &Options::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn max_rank_zero_gives_rank_zero_nonterminals() {
    let t = common::random_tree(11, 2000, 3);
    let opts = Options { max_rank: Some(0), optimize: Optimize::Edges, dag: true };
    let g = compress_tree(&t, &opts);
    for a in g.nonterminals() {
        assert_eq!(g.prod(a).rank, 0);
    }
    assert!(g.unfold().unwrap().same_as(&t));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treerepair"))
}

#[test]
fn cli_compress_decompress_stats() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("books.xml");
    std::fs::write(&input, BOOKS_XML).unwrap();
    let packed = dir.path().join("books.trp");
    let out = cli()
        .args(["compress", "-optimize", "edges", "-max_rank", "99", "-no_dag"])
        .arg(&input)
        .arg(&packed)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&packed).unwrap(), GOLDEN_TRP);

    let back = dir.path().join("back.xml");
    let out = cli().arg("decompress").arg(&packed).arg(&back).output().unwrap();
    assert!(out.status.success());
    assert!(parse_xml(&std::fs::read(&back).unwrap()).unwrap().same_as(&books()));

    let out = cli()
        .args(["stats", "-optimize", "edges", "-max_rank", "inf", "-no_dag"])
        .arg(&input)
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tree_edges: 20\n"), "{text}");
    assert!(text.contains("grammar_edges: 10\n"), "{text}");
    assert!(text.contains("nonterminals: 3\n"), "{text}");
    assert!(text.contains("edge_ratio_percent: 50.00\n"), "{text}");
}

#[test]
fn cli_gen_matches_fixture() {
    let out = cli().args(["gen", "perfect", "3"]).output().unwrap();
    assert!(out.status.success());
    let t = parse_xml(&out.stdout).unwrap();
    assert!(t.same_as(&treerepair::fixtures::gen_perfect_binary(3)));
    assert_eq!(serialize_xml(&t).unwrap(), out.stdout);
}

#[test]
fn cli_usage_errors() {
    for args in [&["compress"][..], &["frobnicate"], &["compress", "-max_rank"], &["compress", "-optimize", "speed", "x.xml"]] {
        let out = cli().args(args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
    }
    let out = cli().args(["compress", "/nonexistent/in.xml"]).output().unwrap();
    assert!(!out.status.success());
}
