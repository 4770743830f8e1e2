//! Text format for sites, contexts, presheaves, morphisms, and gluing data.
//!
//! The grammar is line-oriented in spirit but parsed from a token stream:
//! every statement starts with a reserved keyword, so separators are
//! optional (`;` is accepted and ignored, `#` starts a comment). References
//! must be declared before use, which lets the parser report unknown
//! identifiers with their location.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cat::{CategoryBuilder, FiniteCategory};
use crate::geometry::{all_arrows_class, ArrowClass, GeometricContext, GluingData};
use crate::presheaf::{Morphism, NatTrans, Presheaf};
use crate::topology::{Family, Pretopology, Site};
use crate::Error as EngineError;

pub const MAX_OBJECTS: usize = 8;
pub const MAX_ARROWS: usize = 64;
pub const MAX_SECTIONS: usize = 64;

const KEYWORDS: [&str; 17] = [
    "object", "arrow", "identity", "compose", "space", "points", "open", "cover", "P",
    "presheaf", "morphism", "glue", "chart", "overlap", "at", "restrict", "all",
];

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { line: usize, col: usize, name: String },
    #[error("duplicate identifier `{name}` at {line}:{col}")]
    DuplicateId { line: usize, col: usize, name: String },
    #[error("resource bound exceeded at {line}:{col}: {message}")]
    BoundExceeded { line: usize, col: usize, message: String },
}

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ArrowDecl {
    pub name: String,
    pub src: String,
    pub dst: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SiteDecl {
    Space { points: Vec<String>, opens: Vec<Vec<String>> },
    Explicit {
        objects: Vec<String>,
        arrows: Vec<ArrowDecl>,
        identities: Vec<(String, String)>,
        /// compose g . f = h
        composites: Vec<(String, String, String)>,
        covers: Vec<(String, Vec<String>)>,
    },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClassDecl {
    All,
    Listed(Vec<String>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PresheafDecl {
    pub name: String,
    /// (object, tokens)
    pub sections: Vec<(String, Vec<String>)>,
    /// (arrow, from-token, to-token)
    pub restrictions: Vec<(String, String, String)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MorphismDecl {
    pub name: String,
    pub src: String,
    pub dst: String,
    /// (object, from-token, to-token)
    pub entries: Vec<(String, String, String)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OverlapDecl {
    /// 1-based chart indices as written.
    pub first: usize,
    pub second: usize,
    /// (object, arrow into first chart, arrow into second chart)
    pub entries: Vec<(String, String, String)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GlueDecl {
    pub name: String,
    pub charts: Vec<String>,
    pub overlaps: Vec<OverlapDecl>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContextDocument {
    pub site: SiteDecl,
    pub class: Option<ClassDecl>,
    pub presheaves: Vec<PresheafDecl>,
    pub morphisms: Vec<MorphismDecl>,
    pub gluings: Vec<GlueDecl>,
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Number(usize),
    Colon,
    Arrow,
    Equals,
    Dot,
    Comma,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() || c == ';' {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            out.push(Spanned { tok: Tok::Ident(word), line: tline, col: tcol });
            continue;
        }
        if c.is_ascii_digit() {
            let mut num = 0usize;
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    num = num * 10 + (bump(&mut chars) as usize - '0' as usize);
                } else {
                    break;
                }
            }
            out.push(Spanned { tok: Tok::Number(num), line: tline, col: tcol });
            continue;
        }
        if c == '-' {
            bump(&mut chars);
            if chars.peek() == Some(&'>') {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Arrow, line: tline, col: tcol });
                continue;
            }
            return Err(ParseError::Syntax {
                line: tline,
                col: tcol,
                message: "expected `->`".into(),
            });
        }
        let tok = match c {
            ':' => Tok::Colon,
            '=' => Tok::Equals,
            '.' => Tok::Dot,
            ',' => Tok::Comma,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{}`", other),
                })
            }
        };
        bump(&mut chars);
        out.push(Spanned { tok, line: tline, col: tcol });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    // declared names, filled as the document is read
    objects: Vec<String>,
    arrows: Vec<ArrowDecl>,
    presheaf_names: Vec<String>,
    morphism_names: Vec<String>,
    glue_names: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|s| (s.line, s.col)).unwrap_or_else(|| {
            self.toks.last().map(|s| (s.line, s.col + 1)).unwrap_or((1, 1))
        })
    }

    fn syntax<T>(&self, message: &str) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax { line, col, message: message.to_string() })
    }

    fn next(&mut self, expect: &str) -> Result<Spanned, ParseError> {
        match self.toks.get(self.pos) {
            Some(s) => {
                self.pos += 1;
                Ok(s.clone())
            }
            None => self.syntax(&format!("expected {}, found end of input", expect)),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        let s = self.next(what)?;
        if s.tok == tok {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                line: s.line,
                col: s.col,
                message: format!("expected {}", what),
            })
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        let s = self.next(what)?;
        match s.tok {
            Tok::Ident(name) => {
                if KEYWORDS.contains(&name.as_str()) {
                    Err(ParseError::Syntax {
                        line: s.line,
                        col: s.col,
                        message: format!("`{}` is a reserved word", name),
                    })
                } else {
                    Ok((name, s.line, s.col))
                }
            }
            _ => Err(ParseError::Syntax {
                line: s.line,
                col: s.col,
                message: format!("expected {}", what),
            }),
        }
    }

    fn peek_keyword(&self) -> Option<&str> {
        match self.peek() {
            Some(Spanned { tok: Tok::Ident(w), .. }) if KEYWORDS.contains(&w.as_str()) => {
                Some(w.as_str())
            }
            _ => None,
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        let s = self.next(&format!("`{}`", word))?;
        match s.tok {
            Tok::Ident(w) if w == word => Ok(()),
            _ => Err(ParseError::Syntax {
                line: s.line,
                col: s.col,
                message: format!("expected `{}`", word),
            }),
        }
    }

    fn object_ref(&mut self) -> Result<String, ParseError> {
        let (name, line, col) = self.ident("an object name")?;
        if self.objects.contains(&name) {
            Ok(name)
        } else {
            Err(ParseError::UnknownIdentifier { line, col, name })
        }
    }

    fn arrow_ref(&mut self) -> Result<String, ParseError> {
        let (name, line, col) = self.ident("an arrow name")?;
        if self.arrows.iter().any(|a| a.name == name) {
            Ok(name)
        } else {
            Err(ParseError::UnknownIdentifier { line, col, name })
        }
    }
}

/// Parses a document; references are resolved as they are read.
pub fn parse(text: &str) -> Result<ContextDocument, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        objects: Vec::new(),
        arrows: Vec::new(),
        presheaf_names: Vec::new(),
        morphism_names: Vec::new(),
        glue_names: Vec::new(),
    };
    let mut space: Option<(Vec<String>, Vec<Vec<String>>)> = None;
    let mut explicit_used = false;
    let mut identities = Vec::new();
    let mut composites = Vec::new();
    let mut covers = Vec::new();
    let mut class = None;
    let mut presheaves: Vec<PresheafDecl> = Vec::new();
    let mut morphisms = Vec::new();
    let mut gluings = Vec::new();
    while p.peek().is_some() {
        let Some(kw) = p.peek_keyword() else {
            return p.syntax("expected a statement keyword");
        };
        match kw {
            "object" => {
                explicit_used = true;
                p.keyword("object")?;
                let (name, line, col) = p.ident("an object name")?;
                if p.objects.contains(&name) {
                    return Err(ParseError::DuplicateId { line, col, name });
                }
                if p.objects.len() == MAX_OBJECTS {
                    return Err(ParseError::BoundExceeded {
                        line,
                        col,
                        message: format!("more than {} objects", MAX_OBJECTS),
                    });
                }
                p.objects.push(name);
            }
            "arrow" => {
                explicit_used = true;
                p.keyword("arrow")?;
                let (name, line, col) = p.ident("an arrow name")?;
                if p.arrows.iter().any(|a| a.name == name) {
                    return Err(ParseError::DuplicateId { line, col, name });
                }
                if p.arrows.len() == MAX_ARROWS {
                    return Err(ParseError::BoundExceeded {
                        line,
                        col,
                        message: format!("more than {} arrows", MAX_ARROWS),
                    });
                }
                p.expect(Tok::Colon, "`:`")?;
                let src = p.object_ref()?;
                p.expect(Tok::Arrow, "`->`")?;
                let dst = p.object_ref()?;
                p.arrows.push(ArrowDecl { name, src, dst });
            }
            "identity" => {
                explicit_used = true;
                p.keyword("identity")?;
                let obj = p.object_ref()?;
                p.expect(Tok::Equals, "`=`")?;
                let arr = p.arrow_ref()?;
                identities.push((obj, arr));
            }
            "compose" => {
                explicit_used = true;
                p.keyword("compose")?;
                let g = p.arrow_ref()?;
                p.expect(Tok::Dot, "`.`")?;
                let f = p.arrow_ref()?;
                p.expect(Tok::Equals, "`=`")?;
                let h = p.arrow_ref()?;
                composites.push((g, f, h));
            }
            "space" => {
                let (line, col) = p.here();
                if space.is_some() || explicit_used {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        message: "a document declares a single site".into(),
                    });
                }
                p.keyword("space")?;
                p.expect(Tok::LBrace, "`{`")?;
                p.keyword("points")?;
                let mut points = Vec::new();
                while matches!(p.peek(), Some(Spanned { tok: Tok::Ident(w), .. })
                    if !KEYWORDS.contains(&w.as_str()))
                {
                    let (name, line, col) = p.ident("a point name")?;
                    if points.contains(&name) {
                        return Err(ParseError::DuplicateId { line, col, name });
                    }
                    points.push(name);
                }
                let mut opens = Vec::new();
                while p.peek_keyword() == Some("open") {
                    p.keyword("open")?;
                    let mut open = Vec::new();
                    while matches!(p.peek(), Some(Spanned { tok: Tok::Ident(w), .. })
                        if !KEYWORDS.contains(&w.as_str()))
                    {
                        let (name, line, col) = p.ident("a point name")?;
                        if !points.contains(&name) {
                            return Err(ParseError::UnknownIdentifier { line, col, name });
                        }
                        open.push(name);
                    }
                    opens.push(open);
                }
                p.expect(Tok::RBrace, "`}`")?;
                if opens.len() > MAX_OBJECTS {
                    return Err(ParseError::BoundExceeded {
                        line,
                        col,
                        message: format!("more than {} opens", MAX_OBJECTS),
                    });
                }
                // expand generated names so later references resolve
                let (names, arrow_decls) = expand_space_names(&points, &opens);
                p.objects = names;
                p.arrows = arrow_decls;
                space = Some((points, opens));
            }
            "cover" => {
                p.keyword("cover")?;
                let (line, col) = p.here();
                if space.is_some() {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        message: "cover lines are not allowed with the space shorthand".into(),
                    });
                }
                let obj = p.object_ref()?;
                p.expect(Tok::Equals, "`=`")?;
                p.expect(Tok::LBracket, "`[`")?;
                let mut family = Vec::new();
                while !matches!(p.peek(), Some(Spanned { tok: Tok::RBracket, .. })) {
                    family.push(p.arrow_ref()?);
                }
                p.expect(Tok::RBracket, "`]`")?;
                covers.push((obj, family));
            }
            "P" => {
                p.keyword("P")?;
                let (line, col) = p.here();
                if class.is_some() {
                    return Err(ParseError::DuplicateId { line, col, name: "P".into() });
                }
                p.expect(Tok::Equals, "`=`")?;
                if p.peek_keyword() == Some("all") {
                    p.keyword("all")?;
                    class = Some(ClassDecl::All);
                } else {
                    p.expect(Tok::LBracket, "`[`")?;
                    let mut arrows = Vec::new();
                    while !matches!(p.peek(), Some(Spanned { tok: Tok::RBracket, .. })) {
                        arrows.push(p.arrow_ref()?);
                    }
                    p.expect(Tok::RBracket, "`]`")?;
                    class = Some(ClassDecl::Listed(arrows));
                }
            }
            "presheaf" => {
                p.keyword("presheaf")?;
                let (name, line, col) = p.ident("a presheaf name")?;
                if p.presheaf_names.contains(&name) {
                    return Err(ParseError::DuplicateId { line, col, name });
                }
                p.expect(Tok::LBrace, "`{`")?;
                let mut sections: Vec<(String, Vec<String>)> = Vec::new();
                let mut restrictions = Vec::new();
                loop {
                    match p.peek_keyword() {
                        Some("at") => {
                            p.keyword("at")?;
                            let (oline, ocol) = p.here();
                            let obj = p.object_ref()?;
                            if sections.iter().any(|(o, _)| *o == obj) {
                                return Err(ParseError::DuplicateId {
                                    line: oline,
                                    col: ocol,
                                    name: obj,
                                });
                            }
                            p.expect(Tok::Colon, "`:`")?;
                            p.expect(Tok::LBrace, "`{`")?;
                            let mut toks = Vec::new();
                            while !matches!(p.peek(), Some(Spanned { tok: Tok::RBrace, .. })) {
                                let (t, tl, tc) = p.ident("a section token")?;
                                if toks.contains(&t) {
                                    return Err(ParseError::DuplicateId {
                                        line: tl,
                                        col: tc,
                                        name: t,
                                    });
                                }
                                if toks.len() == MAX_SECTIONS {
                                    return Err(ParseError::BoundExceeded {
                                        line: tl,
                                        col: tc,
                                        message: format!(
                                            "more than {} sections at one object",
                                            MAX_SECTIONS
                                        ),
                                    });
                                }
                                toks.push(t);
                            }
                            p.expect(Tok::RBrace, "`}`")?;
                            sections.push((obj, toks));
                        }
                        Some("restrict") => {
                            p.keyword("restrict")?;
                            let arr = p.arrow_ref()?;
                            p.expect(Tok::Colon, "`:`")?;
                            let (from, _, _) = p.ident("a token")?;
                            p.expect(Tok::Arrow, "`->`")?;
                            let (to, _, _) = p.ident("a token")?;
                            restrictions.push((arr, from, to));
                        }
                        _ => break,
                    }
                }
                p.expect(Tok::RBrace, "`}`")?;
                p.presheaf_names.push(name.clone());
                presheaves.push(PresheafDecl { name, sections, restrictions });
            }
            "morphism" => {
                p.keyword("morphism")?;
                let (name, line, col) = p.ident("a morphism name")?;
                if p.morphism_names.contains(&name) {
                    return Err(ParseError::DuplicateId { line, col, name });
                }
                p.expect(Tok::Colon, "`:`")?;
                let (src, sline, scol) = p.ident("a presheaf name")?;
                if !p.presheaf_names.contains(&src) {
                    return Err(ParseError::UnknownIdentifier {
                        line: sline,
                        col: scol,
                        name: src,
                    });
                }
                p.expect(Tok::Arrow, "`->`")?;
                let (dst, dline, dcol) = p.ident("a presheaf name")?;
                if !p.presheaf_names.contains(&dst) {
                    return Err(ParseError::UnknownIdentifier {
                        line: dline,
                        col: dcol,
                        name: dst,
                    });
                }
                p.expect(Tok::LBrace, "`{`")?;
                let mut entries = Vec::new();
                while p.peek_keyword() == Some("at") {
                    p.keyword("at")?;
                    let obj = p.object_ref()?;
                    p.expect(Tok::Colon, "`:`")?;
                    let (from, _, _) = p.ident("a token")?;
                    p.expect(Tok::Arrow, "`->`")?;
                    let (to, _, _) = p.ident("a token")?;
                    entries.push((obj, from, to));
                }
                p.expect(Tok::RBrace, "`}`")?;
                p.morphism_names.push(name.clone());
                morphisms.push(MorphismDecl { name, src, dst, entries });
            }
            "glue" => {
                p.keyword("glue")?;
                let (name, line, col) = p.ident("a gluing name")?;
                if p.glue_names.contains(&name) {
                    return Err(ParseError::DuplicateId { line, col, name });
                }
                p.expect(Tok::LBrace, "`{`")?;
                let mut charts = Vec::new();
                let mut overlaps = Vec::new();
                loop {
                    match p.peek_keyword() {
                        Some("chart") => {
                            p.keyword("chart")?;
                            charts.push(p.object_ref()?);
                        }
                        Some("overlap") => {
                            p.keyword("overlap")?;
                            p.expect(Tok::LParen, "`(`")?;
                            let (fline, fcol) = p.here();
                            let first = match p.next("a chart index")?.tok {
                                Tok::Number(n) => n,
                                _ => {
                                    return Err(ParseError::Syntax {
                                        line: fline,
                                        col: fcol,
                                        message: "expected a chart index".into(),
                                    })
                                }
                            };
                            p.expect(Tok::Comma, "`,`")?;
                            let (sline, scol) = p.here();
                            let second = match p.next("a chart index")?.tok {
                                Tok::Number(n) => n,
                                _ => {
                                    return Err(ParseError::Syntax {
                                        line: sline,
                                        col: scol,
                                        message: "expected a chart index".into(),
                                    })
                                }
                            };
                            p.expect(Tok::RParen, "`)`")?;
                            if first == 0 || first > charts.len() || second == 0
                                || second > charts.len()
                            {
                                return Err(ParseError::Syntax {
                                    line: fline,
                                    col: fcol,
                                    message: "chart index out of range (indices are 1-based)"
                                        .into(),
                                });
                            }
                            p.expect(Tok::Equals, "`=`")?;
                            p.expect(Tok::LBrace, "`{`")?;
                            let mut entries = Vec::new();
                            while p.peek_keyword() == Some("at") {
                                p.keyword("at")?;
                                let obj = p.object_ref()?;
                                p.expect(Tok::Colon, "`:`")?;
                                while matches!(p.peek(), Some(Spanned { tok: Tok::LParen, .. }))
                                {
                                    p.expect(Tok::LParen, "`(`")?;
                                    let a = p.arrow_ref()?;
                                    p.expect(Tok::Comma, "`,`")?;
                                    let b = p.arrow_ref()?;
                                    p.expect(Tok::RParen, "`)`")?;
                                    entries.push((obj.clone(), a, b));
                                }
                            }
                            p.expect(Tok::RBrace, "`}`")?;
                            overlaps.push(OverlapDecl { first, second, entries });
                        }
                        _ => break,
                    }
                }
                p.expect(Tok::RBrace, "`}`")?;
                p.glue_names.push(name.clone());
                gluings.push(GlueDecl { name, charts, overlaps });
            }
            other => {
                let msg = format!("unexpected keyword `{}` here", other);
                return p.syntax(&msg);
            }
        }
    }
    let site = match space {
        Some((points, opens)) => SiteDecl::Space { points, opens },
        None => SiteDecl::Explicit {
            objects: p.objects,
            arrows: p.arrows,
            identities,
            composites,
            covers,
        },
    };
    Ok(ContextDocument { site, class, presheaves, morphisms, gluings })
}

/// Generated object and arrow names of a space declaration, in the canonical
/// order used by the expansion.
fn expand_space_names(points: &[String], opens: &[Vec<String>]) -> (Vec<String>, Vec<ArrowDecl>) {
    let index_of = |p: &str| points.iter().position(|q| q == p);
    let mut sets: Vec<BTreeSet<usize>> = opens
        .iter()
        .map(|open| open.iter().filter_map(|p| index_of(p)).collect())
        .collect();
    sets.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    sets.dedup();
    let name = |s: &BTreeSet<usize>| {
        if s.is_empty() {
            "empty".to_string()
        } else {
            s.iter().map(|&i| points[i].as_str()).collect::<Vec<_>>().join("_")
        }
    };
    let names: Vec<String> = sets.iter().map(name).collect();
    let mut arrows = Vec::new();
    for (i, small) in sets.iter().enumerate() {
        for (j, big) in sets.iter().enumerate() {
            if small.is_subset(big) {
                let arrow_name = if i == j {
                    format!("id_{}", names[j])
                } else {
                    format!("{}_to_{}", names[i], names[j])
                };
                arrows.push(ArrowDecl {
                    name: arrow_name,
                    src: names[i].clone(),
                    dst: names[j].clone(),
                });
            }
        }
    }
    (names, arrows)
}

// ---------------------------------------------------------------------------
// Canonical printer
// ---------------------------------------------------------------------------

/// Prints the canonical text of a document; `parse(print(doc)) == doc`.
pub fn print(doc: &ContextDocument) -> String {
    let mut out = String::new();
    match &doc.site {
        SiteDecl::Space { points, opens } => {
            let _ = writeln!(out, "space {{");
            let _ = writeln!(out, "  points {}", points.join(" "));
            for open in opens {
                if open.is_empty() {
                    let _ = writeln!(out, "  open");
                } else {
                    let _ = writeln!(out, "  open {}", open.join(" "));
                }
            }
            let _ = writeln!(out, "}}");
        }
        SiteDecl::Explicit { objects, arrows, identities, composites, covers } => {
            for obj in objects {
                let _ = writeln!(out, "object {}", obj);
            }
            for arr in arrows {
                let _ = writeln!(out, "arrow {}: {} -> {}", arr.name, arr.src, arr.dst);
            }
            for (obj, arr) in identities {
                let _ = writeln!(out, "identity {} = {}", obj, arr);
            }
            for (g, f, h) in composites {
                let _ = writeln!(out, "compose {} . {} = {}", g, f, h);
            }
            for (obj, family) in covers {
                let _ = writeln!(out, "cover {} = [{}]", obj, family.join(" "));
            }
        }
    }
    match &doc.class {
        None => {}
        Some(ClassDecl::All) => {
            let _ = writeln!(out, "P = all");
        }
        Some(ClassDecl::Listed(arrows)) => {
            let _ = writeln!(out, "P = [{}]", arrows.join(" "));
        }
    }
    for ps in &doc.presheaves {
        let _ = writeln!(out, "presheaf {} {{", ps.name);
        for (obj, toks) in &ps.sections {
            let _ = writeln!(out, "  at {}: {{{}}}", obj, toks.join(" "));
        }
        for (arr, from, to) in &ps.restrictions {
            let _ = writeln!(out, "  restrict {}: {} -> {}", arr, from, to);
        }
        let _ = writeln!(out, "}}");
    }
    for m in &doc.morphisms {
        let _ = writeln!(out, "morphism {}: {} -> {} {{", m.name, m.src, m.dst);
        for (obj, from, to) in &m.entries {
            let _ = writeln!(out, "  at {}: {} -> {}", obj, from, to);
        }
        let _ = writeln!(out, "}}");
    }
    for g in &doc.gluings {
        let _ = writeln!(out, "glue {} {{", g.name);
        for chart in &g.charts {
            let _ = writeln!(out, "  chart {}", chart);
        }
        for ov in &g.overlaps {
            let _ = writeln!(out, "  overlap ({},{}) = {{", ov.first, ov.second);
            let mut current: Option<&str> = None;
            for (obj, a, b) in &ov.entries {
                if current != Some(obj.as_str()) {
                    if current.is_some() {
                        let _ = writeln!(out);
                    }
                    let _ = write!(out, "    at {}:", obj);
                    current = Some(obj);
                }
                let _ = write!(out, " ({},{})", a, b);
            }
            if current.is_some() {
                let _ = writeln!(out);
            }
            let _ = writeln!(out, "  }}");
        }
        let _ = writeln!(out, "}}");
    }
    out
}

// ---------------------------------------------------------------------------
// Compiler
// ---------------------------------------------------------------------------

/// A compiled document: the raw site pieces plus named presheaves, morphisms
/// and gluing data. Context validation is performed separately so that the
/// validation command can report failures instead of refusing the input.
#[derive(Debug)]
pub struct Workspace {
    pub cat: FiniteCategory,
    pub pretopology: Pretopology,
    pub class: ArrowClass,
    pub presheaves: Vec<(String, Presheaf)>,
    /// (name, source presheaf name, target presheaf name, morphism)
    pub morphisms: Vec<(String, String, String, Morphism)>,
    pub gluings: Vec<(String, GluingData)>,
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum CompileError {
    #[error("{0}")]
    Category(#[from] crate::cat::CategoryError),
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("presheaf `{presheaf}`: {message}")]
    Presheaf { presheaf: String, message: String },
    #[error("morphism `{morphism}`: {message}")]
    Morphism { morphism: String, message: String },
    #[error("gluing `{gluing}`: {message}")]
    Gluing { gluing: String, message: String },
}

/// Builds the category, pretopology and class from a parsed document.
pub fn compile(doc: &ContextDocument) -> Result<Workspace, CompileError> {
    let (cat, pretopology) = match &doc.site {
        SiteDecl::Space { points, opens } => {
            let point_refs: Vec<&str> = points.iter().map(|s| s.as_str()).collect();
            let open_indices: Vec<Vec<usize>> = opens
                .iter()
                .map(|open| {
                    open.iter()
                        .map(|p| points.iter().position(|q| q == p).expect("parser checked"))
                        .collect()
                })
                .collect();
            let open_refs: Vec<&[usize]> =
                open_indices.iter().map(|v| v.as_slice()).collect();
            // topology-on-points validation mirrors the space recipe
            validate_space(points, &open_indices)?;
            let (cat, sets) = crate::fixtures::poset_of_opens_with_sets(&point_refs, &open_refs);
            let cov = crate::fixtures::open_cover_pretopology(&cat, &sets);
            (cat, cov)
        }
        SiteDecl::Explicit { objects, arrows, identities, composites, covers } => {
            let mut b = CategoryBuilder::new();
            let mut obj_ids = Vec::new();
            for obj in objects {
                obj_ids.push(b.object(obj));
            }
            let obj_id = |name: &str| {
                obj_ids[objects.iter().position(|o| o == name).expect("parser checked")]
            };
            let mut arr_ids = Vec::new();
            for arr in arrows {
                arr_ids.push(b.arrow(&arr.name, obj_id(&arr.src), obj_id(&arr.dst)));
            }
            let arr_id = |name: &str| {
                arr_ids[arrows.iter().position(|a| a.name == name).expect("parser checked")]
            };
            for (obj, arr) in identities {
                b.identity(obj_id(obj), arr_id(arr));
            }
            for (g, f, h) in composites {
                b.composite(arr_id(f), arr_id(g), arr_id(h));
            }
            let cat = b.build()?;
            let mut cov = Pretopology::empty(&cat);
            for (obj, family) in covers {
                let target = cat.object_by_name(obj).expect("parser checked");
                let fam: Family = family
                    .iter()
                    .map(|a| cat.arrow_by_name(a).expect("parser checked"))
                    .collect();
                cov.add(target, fam);
            }
            (cat, cov)
        }
    };
    let class = match &doc.class {
        None | Some(ClassDecl::All) => all_arrows_class(&cat),
        Some(ClassDecl::Listed(names)) => names
            .iter()
            .map(|n| cat.arrow_by_name(n).expect("parser checked"))
            .collect(),
    };
    let mut presheaves: Vec<(String, Presheaf)> = Vec::new();
    for decl in &doc.presheaves {
        let presheaf = compile_presheaf(&cat, decl)?;
        presheaves.push((decl.name.clone(), presheaf));
    }
    let mut morphisms = Vec::new();
    for decl in &doc.morphisms {
        let src = &presheaves.iter().find(|(n, _)| *n == decl.src).expect("parser checked").1;
        let dst = &presheaves.iter().find(|(n, _)| *n == decl.dst).expect("parser checked").1;
        let morphism = compile_morphism(&cat, decl, src, dst)?;
        morphisms.push((decl.name.clone(), decl.src.clone(), decl.dst.clone(), morphism));
    }
    let mut gluings = Vec::new();
    for decl in &doc.gluings {
        gluings.push((decl.name.clone(), compile_gluing(&cat, decl)?));
    }
    Ok(Workspace { cat, pretopology, class, presheaves, morphisms, gluings })
}

fn validate_space(points: &[String], opens: &[Vec<usize>]) -> Result<(), CompileError> {
    let refs: Vec<&str> = points.iter().map(|s| s.as_str()).collect();
    let slices: Vec<&[usize]> = opens.iter().map(|v| v.as_slice()).collect();
    // reuse the full validation from the context builder
    match crate::geometry::context_from_finite_space(&refs, &slices) {
        Ok(_) => Ok(()),
        Err(e) => Err(CompileError::Engine(e)),
    }
}

fn compile_presheaf(cat: &FiniteCategory, decl: &PresheafDecl) -> Result<Presheaf, CompileError> {
    let fail = |message: String| CompileError::Presheaf {
        presheaf: decl.name.clone(),
        message,
    };
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); cat.object_count()];
    for (obj, toks) in &decl.sections {
        let u = cat.object_by_name(obj).expect("parser checked");
        labels[u.0] = toks.clone();
    }
    let mut restrict: Vec<Vec<Option<usize>>> = cat
        .all_arrows()
        .map(|f| vec![None; labels[cat.dst(f).0].len()])
        .collect();
    for u in cat.objects() {
        let id = cat.id(u);
        restrict[id.0] = (0..labels[u.0].len()).map(Some).collect();
    }
    for (arrow, from, to) in &decl.restrictions {
        let f = cat.arrow_by_name(arrow).expect("parser checked");
        let (v, u) = (cat.src(f), cat.dst(f));
        let from_idx = labels[u.0]
            .iter()
            .position(|t| t == from)
            .ok_or_else(|| fail(format!("token `{}` not declared at `{}`", from, cat.object_name(u))))?;
        let to_idx = labels[v.0]
            .iter()
            .position(|t| t == to)
            .ok_or_else(|| fail(format!("token `{}` not declared at `{}`", to, cat.object_name(v))))?;
        if let Some(prev) = restrict[f.0][from_idx] {
            if prev != to_idx {
                return Err(fail(format!(
                    "conflicting restriction of `{}` along `{}`",
                    from, arrow
                )));
            }
        }
        restrict[f.0][from_idx] = Some(to_idx);
    }
    let restrict: Vec<Vec<usize>> = restrict
        .into_iter()
        .enumerate()
        .map(|(i, col)| {
            let f = crate::cat::ArrId(i);
            col.into_iter()
                .enumerate()
                .map(|(s, entry)| {
                    entry.ok_or_else(|| {
                        fail(format!(
                            "restriction along `{}` is missing for token `{}`",
                            cat.arrow_name(f),
                            labels[cat.dst(f).0][s]
                        ))
                    })
                })
                .collect::<Result<Vec<usize>, CompileError>>()
        })
        .collect::<Result<Vec<Vec<usize>>, CompileError>>()?;
    let presheaf = Presheaf { labels, restrict };
    presheaf
        .validate(cat)
        .map_err(|e| fail(e.to_string()))?;
    Ok(presheaf)
}

fn compile_morphism(
    cat: &FiniteCategory,
    decl: &MorphismDecl,
    src: &Presheaf,
    dst: &Presheaf,
) -> Result<Morphism, CompileError> {
    let fail = |message: String| CompileError::Morphism {
        morphism: decl.name.clone(),
        message,
    };
    let mut component: Vec<Vec<Option<usize>>> =
        cat.objects().map(|u| vec![None; src.size(u)]).collect();
    for (obj, from, to) in &decl.entries {
        let u = cat.object_by_name(obj).expect("parser checked");
        let from_idx = src
            .section_by_label(u, from)
            .ok_or_else(|| fail(format!("`{}` is not a section of the source at `{}`", from, obj)))?;
        let to_idx = dst
            .section_by_label(u, to)
            .ok_or_else(|| fail(format!("`{}` is not a section of the target at `{}`", to, obj)))?;
        component[u.0][from_idx] = Some(to_idx);
    }
    let component: Vec<Vec<usize>> = component
        .into_iter()
        .enumerate()
        .map(|(u, col)| {
            col.into_iter()
                .enumerate()
                .map(|(s, entry)| {
                    entry.ok_or_else(|| {
                        fail(format!(
                            "no image for section `{}` at `{}`",
                            src.labels[u][s],
                            cat.object_name(crate::cat::ObjId(u))
                        ))
                    })
                })
                .collect::<Result<Vec<usize>, CompileError>>()
        })
        .collect::<Result<Vec<Vec<usize>>, CompileError>>()?;
    let morphism = Morphism {
        src: src.clone(),
        dst: dst.clone(),
        map: NatTrans { component },
    };
    morphism
        .map
        .validate(cat, &morphism.src, &morphism.dst)
        .map_err(|e| fail(e.to_string()))?;
    Ok(morphism)
}

fn compile_gluing(cat: &FiniteCategory, decl: &GlueDecl) -> Result<GluingData, CompileError> {
    let fail = |message: String| CompileError::Gluing {
        gluing: decl.name.clone(),
        message,
    };
    let charts: Vec<crate::cat::ObjId> = decl
        .charts
        .iter()
        .map(|c| cat.object_by_name(c).expect("parser checked"))
        .collect();
    let mut data = GluingData::new(charts.clone());
    for ov in &decl.overlaps {
        let (i, j) = (ov.first - 1, ov.second - 1);
        let mut table: Vec<BTreeSet<(usize, usize)>> =
            vec![BTreeSet::new(); cat.object_count()];
        for (obj, a, b) in &ov.entries {
            let w = cat.object_by_name(obj).expect("parser checked");
            let fa = cat.arrow_by_name(a).expect("parser checked");
            let fb = cat.arrow_by_name(b).expect("parser checked");
            if cat.src(fa) != w || cat.dst(fa) != charts[i] {
                return Err(fail(format!(
                    "arrow `{}` is not {} -> {}",
                    a,
                    cat.object_name(w),
                    cat.object_name(charts[i])
                )));
            }
            if cat.src(fb) != w || cat.dst(fb) != charts[j] {
                return Err(fail(format!(
                    "arrow `{}` is not {} -> {}",
                    b,
                    cat.object_name(w),
                    cat.object_name(charts[j])
                )));
            }
            table[w.0].insert((
                crate::presheaf::yoneda_index(cat, charts[i], fa),
                crate::presheaf::yoneda_index(cat, charts[j], fb),
            ));
        }
        data.set_overlap(i, j, table);
    }
    Ok(data)
}

/// Builds and validates the full context from a compiled workspace.
pub fn context_of(ws: &Workspace) -> Result<GeometricContext, String> {
    let site = Site::from_pretopology(ws.cat.clone(), ws.pretopology.clone())
        .map_err(|v| v.describe(&ws.cat))?;
    GeometricContext::new(site, ws.class.clone())
        .map_err(|report| format!("context checks failed: {:?}", report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const INT_SPACE: &str = "space { points x m y; open; open x; open y; open x y; open x m y }";

    #[test]
    fn parse_point_fixture() {
        let doc = parse(
            "object pt\narrow id_pt: pt -> pt\nidentity pt = id_pt\ncover pt = [id_pt]\nP = all",
        )
        .unwrap();
        match &doc.site {
            SiteDecl::Explicit { objects, arrows, .. } => {
                assert_eq!(objects.len(), 1);
                assert_eq!(arrows.len(), 1);
            }
            _ => panic!("expected explicit site"),
        }
    }

    #[test]
    fn space_shorthand_expands_to_interval_site() {
        let doc = parse(INT_SPACE).unwrap();
        let ws = compile(&doc).unwrap();
        assert_eq!(ws.cat, crate::fixtures::interval_category());
        assert_eq!(ws.pretopology, crate::fixtures::interval_site().pretopology.unwrap());
    }

    #[test]
    fn unknown_arrow_reference_is_located() {
        let err = parse("object a\narrow f: a -> a\nidentity a = f\ncover a = [g]").unwrap_err();
        match err {
            ParseError::UnknownIdentifier { line, col, name } => {
                assert_eq!(name, "g");
                assert_eq!(line, 4);
                assert!(col > 0);
            }
            e => panic!("unexpected {:?}", e),
        }
    }

    #[test]
    fn duplicate_object_is_rejected() {
        let err = parse("object a\nobject a").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateId { .. }));
    }

    #[test]
    fn object_bound_is_enforced() {
        let text: String =
            (0..9).map(|i| format!("object o{}\n", i)).collect();
        assert!(matches!(parse(&text), Err(ParseError::BoundExceeded { .. })));
    }

    #[test]
    fn print_parse_round_trip_on_space_document() {
        let text = format!(
            "{}\npresheaf F {{ at empty: {{a b}} restrict id_empty: a -> a restrict id_empty: b -> b }}",
            INT_SPACE
        );
        let doc = parse(&text).unwrap();
        let printed = print(&doc);
        let reparsed = parse(&printed).unwrap();
        assert_eq!(doc, reparsed);
    }

    #[test]
    fn print_parse_round_trip_on_explicit_document() {
        let doc = parse(
            "object pt\narrow id_pt: pt -> pt\nidentity pt = id_pt\ncover pt = [id_pt]\nP = [id_pt]",
        )
        .unwrap();
        assert_eq!(parse(&print(&doc)).unwrap(), doc);
    }

    #[test]
    fn presheaf_tables_compile_and_validate() {
        let text = format!(
            "{}\npresheaf F {{\nat x_m_y: {{s t}}\nat x_y: {{u}}\nat x: {{v}}\nat y: {{w}}\nat empty: {{z}}\n\
             restrict x_y_to_x_m_y: s -> u\nrestrict x_y_to_x_m_y: t -> u\n\
             restrict x_to_x_m_y: s -> v\nrestrict x_to_x_m_y: t -> v\n\
             restrict y_to_x_m_y: s -> w\nrestrict y_to_x_m_y: t -> w\n\
             restrict empty_to_x_m_y: s -> z\nrestrict empty_to_x_m_y: t -> z\n\
             restrict x_to_x_y: u -> v\nrestrict y_to_x_y: u -> w\nrestrict empty_to_x_y: u -> z\n\
             restrict empty_to_x: v -> z\nrestrict empty_to_y: w -> z\n}}",
            INT_SPACE
        );
        let doc = parse(&text).unwrap();
        let ws = compile(&doc).unwrap();
        assert_eq!(ws.presheaves.len(), 1);
        let f = &ws.presheaves[0].1;
        assert_eq!(f.size(ws.cat.object_by_name("x_m_y").unwrap()), 2);
    }

    #[test]
    fn missing_restriction_is_diagnosed() {
        let text = format!(
            "{}\npresheaf F {{ at x_m_y: {{s}} at x_y: {{u}} at x: {{v}} at y: {{w}} at empty: {{z}} }}",
            INT_SPACE
        );
        let doc = parse(&text).unwrap();
        let err = compile(&doc).unwrap_err();
        assert!(matches!(err, CompileError::Presheaf { .. }));
    }
}
