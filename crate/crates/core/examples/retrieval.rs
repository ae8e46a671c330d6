// Parse course materials into chunks, index them, and retrieve the
// nearest chunks for a topic.

use codegen::ingestion::{chunk_document, parse_materials};
use codegen::retrieval::{retrieve_context, KnowledgeBase, OfflineEmbedder};

const MATERIALS: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/e2e/loops.md"));

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let doc = parse_materials(MATERIALS, "loops", "loops")?;
    for b in &doc.blocks {
        println!("{:>3}-{:<3} {}", b.start_line, b.end_line, b.kind.as_str());
    }
    let chunks = chunk_document(&doc);

    let embedder = OfflineEmbedder::default();
    let kb = KnowledgeBase::empty(256)?.with_chunks(chunks, &embedder)?;
    let ctx = retrieve_context("while loop condition", &kb, &embedder, 3)?;
    for r in &ctx.chunks {
        println!("{:.4}  {}", r.squared_distance, r.chunk.chunk_id);
    }
    assert_eq!(ctx.chunks.len(), 3);
    assert!(ctx.chunks.windows(2).all(|w| w[0].squared_distance <= w[1].squared_distance));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
