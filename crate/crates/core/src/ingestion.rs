//! Instructional-material parsing and chunking.
//!
//! Materials are line oriented:
//!
//! ```text
//! OBJECTIVE: Trace while loops
//! QUESTION: What does the program print?
//! A) 0 1 2
//! B) 1 2 3
//! C) 0 1 2 3
//! D) nothing
//! ANSWER: A
//! FEEDBACK: The loop stops once i reaches 3.
//! ```
//!
//! followed by triple-backtick fenced code. Inside a fence, triple-quote
//! markers toggle docstring state and a fence line inside an open docstring
//! is ordinary text. Text lines attach to the currently open block; text
//! before any marker forms an `other` block.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Objective,
    SampleQuestion,
    CodeExample,
    Other,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Objective => "objective",
            BlockKind::SampleQuestion => "sample_question",
            BlockKind::CodeExample => "code_example",
            BlockKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    /// Source lines of the block, fence lines included, trailing blank lines
    /// removed.
    pub text: String,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: String,
    pub topic: String,
    pub raw_text: String,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSource {
    pub doc_id: String,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub topic: String,
    pub kind: BlockKind,
    pub text: String,
    pub source: ChunkSource,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {what} opened but never closed")]
    UnterminatedFence { line: usize, what: &'static str },
    #[error("no classifiable content")]
    EmptyInput,
    #[error("materials are not valid UTF-8")]
    InvalidEncoding,
}

const FENCE: &str = "```";

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with(FENCE)
}

fn marker_kind(line: &str) -> Option<BlockKind> {
    let t = line.trim_start();
    if t.starts_with("OBJECTIVE:") {
        Some(BlockKind::Objective)
    } else if t.starts_with("QUESTION:") {
        Some(BlockKind::SampleQuestion)
    } else {
        None
    }
}

/// Advances docstring state across one code line. `open` holds the
/// delimiter of the currently open docstring.
fn scan_docstrings(line: &str, open: &mut Option<&'static str>) {
    let mut rest = line;
    loop {
        match *open {
            Some(delim) => match rest.find(delim) {
                Some(i) => {
                    rest = &rest[i + 3..];
                    *open = None;
                }
                None => return,
            },
            None => {
                let d = rest.find("\"\"\"");
                let s = rest.find("'''");
                let (i, delim) = match (d, s) {
                    (Some(a), Some(b)) if b < a => (b, "'''"),
                    (Some(a), _) => (a, "\"\"\""),
                    (None, Some(b)) => (b, "'''"),
                    (None, None) => return,
                };
                rest = &rest[i + 3..];
                *open = Some(delim);
            }
        }
    }
}

struct OpenBlock {
    kind: BlockKind,
    start: usize,
    last_nonblank: usize,
}

/// Parses materials from raw bytes, rejecting invalid UTF-8.
pub fn parse_materials_bytes(
    raw: &[u8],
    doc_id: &str,
    topic: &str,
) -> Result<SourceDocument, IngestError> {
    let text = std::str::from_utf8(raw).map_err(|_| IngestError::InvalidEncoding)?;
    parse_materials(text, doc_id, topic)
}

pub fn parse_materials(raw: &str, doc_id: &str, topic: &str) -> Result<SourceDocument, IngestError> {
    let lines: Vec<&str> = raw.lines().collect();
    if lines.iter().all(|l| l.trim().is_empty()) {
        return Err(IngestError::EmptyInput);
    }
    let mut ranges: Vec<(BlockKind, usize, usize)> = Vec::new();
    let mut open: Option<OpenBlock> = None;
    let close = |open: &mut Option<OpenBlock>, ranges: &mut Vec<(BlockKind, usize, usize)>| {
        if let Some(b) = open.take() {
            ranges.push((b.kind, b.start, b.last_nonblank));
        }
    };

    let mut idx = 0;
    while idx < lines.len() {
        let line = lines[idx];
        let lineno = idx + 1;
        if is_fence(line) {
            close(&mut open, &mut ranges);
            let mut docstring: Option<&'static str> = None;
            let mut j = idx + 1;
            let mut closed_at = None;
            while j < lines.len() {
                if docstring.is_none() && is_fence(lines[j]) {
                    closed_at = Some(j);
                    break;
                }
                scan_docstrings(lines[j], &mut docstring);
                j += 1;
            }
            let Some(end) = closed_at else {
                let what = if docstring.is_some() { "docstring" } else { "code fence" };
                return Err(IngestError::UnterminatedFence { line: lineno, what });
            };
            ranges.push((BlockKind::CodeExample, lineno, end + 1));
            idx = end + 1;
            continue;
        }
        if let Some(kind) = marker_kind(line) {
            close(&mut open, &mut ranges);
            open = Some(OpenBlock { kind, start: lineno, last_nonblank: lineno });
        } else if !line.trim().is_empty() {
            match open.as_mut() {
                Some(b) => b.last_nonblank = lineno,
                None => {
                    open = Some(OpenBlock {
                        kind: BlockKind::Other,
                        start: lineno,
                        last_nonblank: lineno,
                    })
                }
            }
        }
        idx += 1;
    }
    close(&mut open, &mut ranges);

    let blocks = ranges
        .into_iter()
        .map(|(kind, start, end)| Block {
            kind,
            text: join_lines(&lines[start - 1..end]),
            start_line: start,
            end_line: end,
        })
        .collect();
    Ok(SourceDocument {
        doc_id: doc_id.to_string(),
        topic: topic.to_string(),
        raw_text: raw.to_string(),
        blocks,
    })
}

fn join_lines(lines: &[&str]) -> String {
    let joined = lines.join("\n");
    joined.trim_end().to_string()
}

/// Text of a block as it appears in a chunk: fence delimiters dropped.
fn chunk_body(block: &Block) -> String {
    if block.kind != BlockKind::CodeExample {
        return block.text.clone();
    }
    let lines: Vec<&str> = block.text.lines().collect();
    let inner = if lines.len() >= 2 { &lines[1..lines.len() - 1] } else { &[][..] };
    join_lines(inner)
}

pub fn chunk_document(doc: &SourceDocument) -> Vec<Chunk> {
    let raw_lines: Vec<&str> = doc.raw_text.lines().collect();
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < doc.blocks.len() {
        let block = &doc.blocks[i];
        if block.kind == BlockKind::Other {
            i += 1;
            continue;
        }
        let mut end_line = block.end_line;
        let mut text = chunk_body(block);
        if block.kind == BlockKind::SampleQuestion {
            if let Some(code) = doc.blocks.get(i + 1).filter(|b| b.kind == BlockKind::CodeExample) {
                text = join_lines(
                    &(block.start_line..=code.end_line)
                        .filter(|&n| n != code.start_line && n != code.end_line)
                        .map(|n| raw_lines[n - 1])
                        .collect::<Vec<_>>(),
                );
                end_line = code.end_line;
                i += 1;
            }
        }
        i += 1;
        if text.trim().is_empty() {
            continue;
        }
        chunks.push(Chunk {
            chunk_id: format!("{}:{}-{}", doc.doc_id, block.start_line, end_line),
            topic: doc.topic.clone(),
            kind: block.kind,
            text,
            source: ChunkSource {
                doc_id: doc.doc_id.clone(),
                start_line: block.start_line,
                end_line,
            },
        });
    }
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(doc: &SourceDocument) -> Vec<BlockKind> {
        doc.blocks.iter().map(|b| b.kind).collect()
    }

    #[test]
    fn single_objective_line() {
        let doc = parse_materials("OBJECTIVE: Trace while loops", "d", "loops").unwrap();
        assert_eq!(kinds(&doc), vec![BlockKind::Objective]);
        assert_eq!(doc.blocks[0].start_line, 1);
        assert_eq!(doc.blocks[0].end_line, 1);
    }

    #[test]
    fn docstring_line_stays_in_code_block() {
        let raw = "OBJECTIVE: Functions\n```python\ndef f():\n    \"\"\"doc\"\"\"\n    return 1\n```\n";
        let doc = parse_materials(raw, "d", "functions").unwrap();
        assert_eq!(kinds(&doc), vec![BlockKind::Objective, BlockKind::CodeExample]);
        assert!(doc.blocks[1].text.contains("\"\"\"doc\"\"\""));
        assert_eq!((doc.blocks[1].start_line, doc.blocks[1].end_line), (2, 6));
    }

    #[test]
    fn fence_inside_open_docstring_is_literal() {
        let raw = "```\ns = '''\n```\n'''\nprint(s)\n```";
        let doc = parse_materials(raw, "d", "t").unwrap();
        assert_eq!(doc.blocks.len(), 1);
        assert_eq!(doc.blocks[0].end_line, 6);
        let chunks = chunk_document(&doc);
        assert_eq!(chunks[0].text, "s = '''\n```\n'''\nprint(s)");
    }

    #[test]
    fn unterminated_fence() {
        let err = parse_materials("OBJECTIVE: x\n```\nprint(1)\n", "d", "t").unwrap_err();
        assert_eq!(err, IngestError::UnterminatedFence { line: 2, what: "code fence" });
        let err = parse_materials("```\n\"\"\"open\n```\n", "d", "t").unwrap_err();
        assert_eq!(err, IngestError::UnterminatedFence { line: 1, what: "docstring" });
    }

    #[test]
    fn empty_and_invalid_input() {
        assert_eq!(parse_materials("  \n\n", "d", "t"), Err(IngestError::EmptyInput));
        assert_eq!(
            parse_materials_bytes(&[0x4f, 0xff, 0x0a], "d", "t"),
            Err(IngestError::InvalidEncoding)
        );
    }

    #[test]
    fn text_attaches_to_open_block_and_leading_text_is_other() {
        let raw = "Intro notes\n\nOBJECTIVE: Lists\nappend adds to the end\n\n\nQUESTION: Q?\nA) 1\nB) 2\nC) 3\nD) 4\nANSWER: B\n";
        let doc = parse_materials(raw, "d", "t").unwrap();
        assert_eq!(
            kinds(&doc),
            vec![BlockKind::Other, BlockKind::Objective, BlockKind::SampleQuestion]
        );
        assert_eq!(doc.blocks[1].text, "OBJECTIVE: Lists\nappend adds to the end");
        assert_eq!((doc.blocks[1].start_line, doc.blocks[1].end_line), (3, 4));
        assert_eq!(doc.blocks[2].end_line, 12);
    }

    #[test]
    fn chunks_keep_kinds_without_merge() {
        let doc = parse_materials("OBJECTIVE: a\n```\nx = 1\n```", "d", "t").unwrap();
        let chunks = chunk_document(&doc);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].kind, BlockKind::Objective);
        assert_eq!(chunks[1].kind, BlockKind::CodeExample);
        assert_eq!(chunks[1].text, "x = 1");
        assert_eq!(chunks[1].chunk_id, "d:2-4");
    }

    #[test]
    fn question_merges_with_following_code() {
        let raw = "QUESTION: What prints?\nA) 1\nB) 2\nC) 3\nD) 4\nANSWER: A\n\n```\nprint(1)\n```\nOBJECTIVE: printing";
        let doc = parse_materials(raw, "d", "t").unwrap();
        assert_eq!(
            kinds(&doc),
            vec![BlockKind::SampleQuestion, BlockKind::CodeExample, BlockKind::Objective]
        );
        let chunks = chunk_document(&doc);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].kind, BlockKind::SampleQuestion);
        assert_eq!((chunks[0].source.start_line, chunks[0].source.end_line), (1, 10));
        assert!(chunks[0].text.ends_with("ANSWER: A\n\nprint(1)"));
        assert_eq!(chunks[1].kind, BlockKind::Objective);
    }

    #[test]
    fn only_other_blocks_yield_no_chunks() {
        let doc = parse_materials("just prose\nmore prose", "d", "t").unwrap();
        assert_eq!(kinds(&doc), vec![BlockKind::Other]);
        assert!(chunk_document(&doc).is_empty());
    }

    #[test]
    fn empty_code_fence_is_not_a_chunk() {
        let doc = parse_materials("```\n```", "d", "t").unwrap();
        assert_eq!(doc.blocks.len(), 1);
        assert!(chunk_document(&doc).is_empty());
    }
}
