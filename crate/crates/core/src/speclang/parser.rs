//! Recursive-descent parser for `.psys` scenario files.
//!
//! Total over arbitrary input: every byte sequence yields either a fully
//! resolved AST or a nonempty list of positioned diagnostics, never a panic
//! and never both. Recovery is per statement: after an error the parser
//! skips to the next line (balancing braces) and keeps going, so one broken
//! line does not mask the rest of the file.

use super::ast::*;
use super::diagnostics::{has_errors, Diagnostic};
use super::lexer::{lex, Tok, Token};
use crate::engine::DiffusionSolver;
use crate::model::{Mode, PermClass, Target, MAX_DEPTH};
use crate::population::DistFamily;

pub fn parse(text: &str) -> Result<ScenarioAst, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(text);
    let src_lines: Vec<String> = text.lines().map(String::from).collect();
    let mut p = Parser { tokens, pos: 0, diags: Vec::new(), src_lines };
    let ast = p.parse_scenario();
    diags.extend(p.diags);
    match ast {
        Some(ast) if !has_errors(&diags) => Ok(ast),
        _ => {
            if diags.is_empty() {
                diags.push(Diagnostic::error(1, 1, "empty or unusable scenario"));
            }
            Err(diags)
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    src_lines: Vec<String>,
}

/// Marker: a diagnostic was recorded and the statement should resync.
struct Bail;
type Parsed<T> = Result<T, Bail>;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> Pos {
        match self.peek() {
            Some(t) => Pos::new(t.line, t.column),
            None => {
                let line = self.src_lines.len().max(1) as u32;
                let col = self
                    .src_lines
                    .last()
                    .map(|l| l.chars().count() as u32 + 1)
                    .unwrap_or(1);
                Pos::new(line, col)
            }
        }
    }

    fn excerpt(&self, line: u32) -> String {
        self.src_lines
            .get(line.saturating_sub(1) as usize)
            .cloned()
            .unwrap_or_default()
    }

    fn error_here(&mut self, message: impl Into<String>) -> Bail {
        let pos = self.here();
        let d = Diagnostic::error(pos.line, pos.column, message).with_excerpt(self.excerpt(pos.line));
        self.diags.push(d);
        Bail
    }

    fn error_at(&mut self, pos: Pos, message: impl Into<String>) {
        let d = Diagnostic::error(pos.line, pos.column, message).with_excerpt(self.excerpt(pos.line));
        self.diags.push(d);
    }

    fn warn_at(&mut self, pos: Pos, message: impl Into<String>) {
        let d =
            Diagnostic::warning(pos.line, pos.column, message).with_excerpt(self.excerpt(pos.line));
        self.diags.push(d);
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek().map(|t| &t.tok), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    /// Resync after an error: skip to the next newline, balancing any braces
    /// opened along the way so a broken block header swallows its body.
    fn sync(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.bump() {
            match t.tok {
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth = depth.saturating_sub(1),
                Tok::Newline if depth == 0 => return,
                _ => {}
            }
        }
    }

    fn eat_ident(&mut self, what: &str) -> Parsed<(String, Pos)> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(_), .. }) => {
                let t = self.bump().unwrap();
                let Tok::Ident(s) = t.tok else { unreachable!() };
                Ok((s, Pos::new(t.line, t.column)))
            }
            Some(t) => {
                let found = t.tok.describe();
                Err(self.error_here(format!("expected {what}, found {found}")))
            }
            None => Err(self.error_here(format!("expected {what}, found end of input"))),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> Parsed<Pos> {
        let (word, pos) = self.eat_ident(&format!("'{kw}'"))?;
        if word == kw {
            Ok(pos)
        } else {
            self.error_at(pos, format!("expected '{kw}', found '{word}'"));
            Err(Bail)
        }
    }

    fn eat_number(&mut self, what: &str) -> Parsed<(f64, Pos)> {
        match self.peek() {
            Some(Token { tok: Tok::Number(_), .. }) => {
                let t = self.bump().unwrap();
                let Tok::Number(n) = t.tok else { unreachable!() };
                Ok((n, Pos::new(t.line, t.column)))
            }
            Some(t) => {
                let found = t.tok.describe();
                Err(self.error_here(format!("expected {what}, found {found}")))
            }
            None => Err(self.error_here(format!("expected {what}, found end of input"))),
        }
    }

    fn eat_integer(&mut self, what: &str) -> Parsed<(i64, Pos)> {
        let (n, pos) = self.eat_number(what)?;
        if n.fract() != 0.0 || n.abs() > 9e15 {
            self.error_at(pos, format!("{what} must be an integer, got {n}"));
            return Err(Bail);
        }
        Ok((n as i64, pos))
    }

    fn eat_tok(&mut self, tok: Tok, what: &str) -> Parsed<Pos> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                let t = self.bump().unwrap();
                Ok(Pos::new(t.line, t.column))
            }
            Some(t) => {
                let found = t.tok.describe();
                Err(self.error_here(format!("expected {what}, found {found}")))
            }
            None => Err(self.error_here(format!("expected {what}, found end of input"))),
        }
    }

    fn eat_newline(&mut self) -> Parsed<()> {
        match self.peek() {
            Some(t) if t.tok == Tok::Newline => {
                self.pos += 1;
                Ok(())
            }
            None => Ok(()),
            Some(t) => {
                let found = t.tok.describe();
                Err(self.error_here(format!("expected end of line, found {found}")))
            }
        }
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek().map(|t| &t.tok) == Some(tok)
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == word)
    }

    // ------------------------------------------------------------------

    fn parse_scenario(&mut self) -> Option<ScenarioAst> {
        self.skip_newlines();
        let header = self.parse_header();
        let (name, mode) = match header {
            Ok(h) => h,
            Err(Bail) => {
                self.sync();
                ("invalid".to_string(), Mode::Kinetic)
            }
        };

        let mut ast = ScenarioAst {
            name,
            mode,
            species: Vec::new(),
            atoms: Vec::new(),
            environment: None,
            compartments: Vec::new(),
            generator: None,
            swelling: None,
            rules: Vec::new(),
            interventions: Vec::new(),
            run: RunDecl::default(),
        };
        let mut saw_run = false;

        loop {
            self.skip_newlines();
            let Some(tok) = self.peek() else { break };
            let pos = Pos::new(tok.line, tok.column);
            let word = match &tok.tok {
                Tok::Ident(s) => s.clone(),
                other => {
                    let found = other.describe();
                    self.error_at(pos, format!("expected a statement keyword, found {found}"));
                    self.sync();
                    continue;
                }
            };
            let result: Parsed<()> = match word.as_str() {
                "species" => self.parse_species(&mut ast),
                "atom" => self.parse_atom(&mut ast),
                "environment" => self.parse_environment(&mut ast),
                "compartment" => self.parse_compartment_root(&mut ast),
                "generator" => self.parse_generator(&mut ast),
                "swelling" => self.parse_swelling(&mut ast),
                "rule" => self.parse_rule(&mut ast),
                "at" => self.parse_at(&mut ast),
                "run" => {
                    saw_run = true;
                    self.parse_run(&mut ast)
                }
                other => {
                    self.error_at(pos, format!("unknown statement '{other}'"));
                    Err(Bail)
                }
            };
            if result.is_err() {
                self.sync();
            }
        }

        if !saw_run {
            let pos = self.here();
            self.error_at(pos, "scenario needs a run { ... } block");
        }
        self.check_semantics(&ast);
        Some(ast)
    }

    fn parse_header(&mut self) -> Parsed<(String, Mode)> {
        self.eat_keyword("system")?;
        let (name, _) = self.eat_ident("system name")?;
        self.eat_keyword("mode")?;
        let (mode_word, mode_pos) = self.eat_ident("'abstract' or 'kinetic'")?;
        let mode = match mode_word.as_str() {
            "abstract" => Mode::Abstract,
            "kinetic" => Mode::Kinetic,
            other => {
                self.error_at(mode_pos, format!("mode must be 'abstract' or 'kinetic', got '{other}'"));
                return Err(Bail);
            }
        };
        self.eat_newline()?;
        Ok((name, mode))
    }

    fn parse_species(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("species")?;
        let (name, _) = self.eat_ident("species name")?;
        self.eat_keyword("class")?;
        let (class_word, class_pos) = self.eat_ident("permeability class")?;
        let Some(class) = PermClass::parse(&class_word) else {
            self.error_at(
                class_pos,
                format!(
                    "unknown permeability class '{class_word}' (expected one of gas, small_polar, lipophilic, ionic, macromolecule, particle)"
                ),
            );
            return Err(Bail);
        };
        let perm = if self.at_ident("perm") {
            self.bump();
            let (v, vpos) = self.eat_number("permeability value")?;
            if v < 0.0 {
                self.error_at(vpos, "permeability must be >= 0");
                return Err(Bail);
            }
            Some(v)
        } else {
            None
        };
        self.eat_newline()?;
        ast.species.push(SpeciesDecl { name, class, perm, pos });
        Ok(())
    }

    fn parse_atom(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("atom")?;
        let (tag, _) = self.eat_ident("atom tag")?;
        self.eat_tok(Tok::LBrace, "'{'")?;
        let mut weights = Vec::new();
        self.block_entries(|p| {
            let (sp, _) = p.eat_ident("species name")?;
            p.eat_tok(Tok::Colon, "':'")?;
            let (w, wpos) = p.eat_integer("atom weight")?;
            if w <= 0 {
                p.error_at(wpos, "atom weights must be positive integers");
                return Err(Bail);
            }
            weights.push((sp, w as u32));
            Ok(())
        })?;
        self.eat_newline()?;
        ast.atoms.push(AtomDecl { tag, weights, pos });
        Ok(())
    }

    /// Entries inside `{ ... }`, separated by commas or newlines.
    fn block_entries(&mut self, mut entry: impl FnMut(&mut Parser) -> Parsed<()>) -> Parsed<()> {
        loop {
            while self.at(&Tok::Newline) || self.at(&Tok::Comma) {
                self.pos += 1;
            }
            if self.at(&Tok::RBrace) {
                self.pos += 1;
                return Ok(());
            }
            if self.peek().is_none() {
                return Err(self.error_here("unclosed block: expected '}'"));
            }
            entry(self)?;
        }
    }

    /// `NAME: VALUE [mM]` with the unit demanded in kinetic mode and
    /// rejected in abstract mode (abstract quantities are bare counts).
    fn measured_entry(&mut self, mode: Mode, unit: &str) -> Parsed<(String, f64)> {
        let (sp, _) = self.eat_ident("species name")?;
        self.eat_tok(Tok::Colon, "':'")?;
        let (v, vpos) = self.eat_number("amount")?;
        if v < 0.0 {
            self.error_at(vpos, "amounts must be >= 0");
            return Err(Bail);
        }
        match mode {
            Mode::Kinetic => {
                let upos = self.here();
                let (u, _) = self.eat_ident(&format!("unit '{unit}'"))?;
                if u != unit {
                    self.error_at(upos, format!("expected unit '{unit}', found '{u}'"));
                    return Err(Bail);
                }
            }
            Mode::Abstract => {
                if v.fract() != 0.0 {
                    self.error_at(vpos, "abstract-mode counts must be integers");
                    return Err(Bail);
                }
            }
        }
        Ok((sp, v))
    }

    fn parse_environment(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("environment")?;
        if ast.environment.is_some() {
            self.error_at(pos, "environment block declared twice");
            return Err(Bail);
        }
        self.eat_tok(Tok::LBrace, "'{'")?;
        let mode = ast.mode;
        let mut volume_fl = None;
        let mut contents = Vec::new();
        self.block_entries(|p| {
            if p.at_ident("volume") {
                p.bump();
                let (v, vpos) = p.eat_number("environment volume")?;
                if v <= 0.0 {
                    p.error_at(vpos, "environment volume must be > 0");
                    return Err(Bail);
                }
                let upos = p.here();
                let (u, _) = p.eat_ident("unit 'fl'")?;
                if u != "fl" {
                    p.error_at(upos, format!("expected unit 'fl', found '{u}'"));
                    return Err(Bail);
                }
                volume_fl = Some(v);
                return Ok(());
            }
            let (sp, v) = p.measured_entry(mode, "mM")?;
            contents.push((sp, v));
            Ok(())
        })?;
        self.eat_newline()?;
        ast.environment = Some(EnvironmentDecl { volume_fl, contents, pos });
        Ok(())
    }

    fn parse_compartment_root(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let decl = self.parse_compartment(ast.mode, 1)?;
        ast.compartments.push(decl);
        Ok(())
    }

    fn parse_compartment(&mut self, mode: Mode, depth: u32) -> Parsed<CompartmentDecl> {
        let pos = self.eat_keyword("compartment")?;
        if depth > MAX_DEPTH {
            self.error_at(
                pos,
                format!("compartment nesting exceeds the depth-{MAX_DEPTH} bound"),
            );
            // keep parsing the subtree to surface further errors
        }
        let (name, _) = self.eat_ident("compartment name")?;
        self.eat_keyword("diameter")?;
        let (diameter_um, dpos) = self.eat_number("diameter")?;
        if diameter_um <= 0.0 {
            self.error_at(dpos, "diameter must be > 0");
            return Err(Bail);
        }
        let upos = self.here();
        let (u, _) = self.eat_ident("unit 'um'")?;
        if u != "um" {
            self.error_at(upos, format!("expected unit 'um', found '{u}'"));
            return Err(Bail);
        }
        self.eat_tok(Tok::LBrace, "'{'")?;
        let mut contents = Vec::new();
        let mut children = Vec::new();
        loop {
            while self.at(&Tok::Newline) || self.at(&Tok::Comma) {
                self.pos += 1;
            }
            if self.at(&Tok::RBrace) {
                self.pos += 1;
                break;
            }
            if self.at_ident("contents") {
                self.bump();
                self.eat_tok(Tok::LBrace, "'{'")?;
                self.block_entries(|p| {
                    let (sp, v) = p.measured_entry(mode, "mM")?;
                    contents.push((sp, v));
                    Ok(())
                })?;
            } else if self.at_ident("compartment") {
                children.push(self.parse_compartment(mode, depth + 1)?);
            } else if self.peek().is_none() {
                return Err(self.error_here("unclosed compartment block: expected '}'"));
            } else {
                return Err(self.error_here(
                    "expected 'contents', a nested 'compartment', or '}'",
                ));
            }
        }
        if depth == 1 {
            self.eat_newline()?;
        }
        Ok(CompartmentDecl { name, diameter_um, contents, children, pos })
    }

    fn parse_generator(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("generator")?;
        if ast.generator.is_some() {
            self.error_at(pos, "generator block declared twice");
            return Err(Bail);
        }
        self.eat_tok(Tok::LBrace, "'{'")?;
        let mut g = GeneratorDecl { pos, ..Default::default() };
        self.block_entries(|p| {
            let (key, kpos) = p.eat_ident("generator field")?;
            p.eat_tok(Tok::Eq, "'='")?;
            match key.as_str() {
                "n" => {
                    let (v, vpos) = p.eat_integer("n")?;
                    if v < 1 {
                        p.error_at(vpos, "n must be >= 1");
                        return Err(Bail);
                    }
                    g.n = Some(v as usize);
                }
                "seed" => {
                    let (v, vpos) = p.eat_integer("seed")?;
                    if v < 0 {
                        p.error_at(vpos, "seed must be >= 0");
                        return Err(Bail);
                    }
                    g.seed = Some(v as u64);
                }
                "prevalence" => {
                    let v = p.number_tuple(4)?;
                    g.prevalence = Some([v[0], v[1], v[2], v[3]]);
                }
                "outer_diameter" | "t3_diameter" | "internal_count" => {
                    p.eat_keyword("trunc")?;
                    let v = p.number_tuple(4)?;
                    let quad = (v[0], v[1], v[2], v[3]);
                    match key.as_str() {
                        "outer_diameter" => g.outer_diameter = Some(quad),
                        "t3_diameter" => g.t3_diameter = Some(quad),
                        _ => g.internal_count = Some(quad),
                    }
                }
                "t3_internal_count" => {
                    let v = p.number_tuple(2)?;
                    if v[0].fract() != 0.0 || v[1].fract() != 0.0 || v[0] < 1.0 {
                        p.error_at(kpos, "t3_internal_count needs positive integer bounds");
                        return Err(Bail);
                    }
                    g.t3_internal_count = Some((v[0] as u32, v[1] as u32));
                }
                "child_fraction" => {
                    let v = p.number_tuple(2)?;
                    g.child_fraction = Some((v[0], v[1]));
                }
                "t3_child_fraction" => {
                    let v = p.number_tuple(2)?;
                    g.t3_child_fraction = Some((v[0], v[1]));
                }
                "family" => {
                    let (w, wpos) = p.eat_ident("'normal' or 'lognormal'")?;
                    let Some(family) = DistFamily::parse(&w) else {
                        p.error_at(wpos, format!("unknown family '{w}'"));
                        return Err(Bail);
                    };
                    g.family = Some(family);
                }
                other => {
                    p.error_at(kpos, format!("unknown generator field '{other}'"));
                    return Err(Bail);
                }
            }
            Ok(())
        })?;
        self.eat_newline()?;
        ast.generator = Some(g);
        Ok(())
    }

    fn number_tuple(&mut self, n: usize) -> Parsed<Vec<f64>> {
        self.eat_tok(Tok::LParen, "'('")?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.eat_tok(Tok::Comma, "','")?;
            }
            let (v, _) = self.eat_number("number")?;
            out.push(v);
        }
        self.eat_tok(Tok::RParen, "')'")?;
        Ok(out)
    }

    fn parse_swelling(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("swelling")?;
        if ast.swelling.is_some() {
            self.error_at(pos, "swelling block declared twice");
            return Err(Bail);
        }
        self.eat_tok(Tok::LBrace, "'{'")?;
        let mut contents = Vec::new();
        self.block_entries(|p| {
            // swelling solutions are always concentrations
            let (sp, _) = p.eat_ident("species name")?;
            p.eat_tok(Tok::Colon, "':'")?;
            let (v, vpos) = p.eat_number("concentration")?;
            if v < 0.0 {
                p.error_at(vpos, "concentrations must be >= 0");
                return Err(Bail);
            }
            let upos = p.here();
            let (u, _) = p.eat_ident("unit 'mM'")?;
            if u != "mM" {
                p.error_at(upos, format!("expected unit 'mM', found '{u}'"));
                return Err(Bail);
            }
            contents.push((sp, v));
            Ok(())
        })?;
        self.eat_newline()?;
        ast.swelling = Some(SwellingDecl { contents, pos });
        Ok(())
    }

    /// `[INT] NAME` multiset item.
    fn multiset_item(&mut self) -> Parsed<(u32, String)> {
        let mult = if let Some(Token { tok: Tok::Number(_), .. }) = self.peek() {
            let (n, npos) = self.eat_integer("multiplicity")?;
            if n < 1 {
                self.error_at(npos, "multiplicities must be positive integers");
                return Err(Bail);
            }
            n as u32
        } else {
            1
        };
        let (sp, _) = self.eat_ident("species name")?;
        Ok((mult, sp))
    }

    fn parse_rule(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("rule")?;
        let (name, _) = self.eat_ident("rule name")?;
        self.eat_tok(Tok::Colon, "':'")?;

        let mut reactants = vec![self.multiset_item()?];
        while self.at(&Tok::Plus) {
            self.pos += 1;
            reactants.push(self.multiset_item()?);
        }
        self.eat_tok(Tok::Arrow, "'->'")?;

        let mut products = Vec::new();
        loop {
            let (mult, sp) = self.multiset_item()?;
            let target = if self.at(&Tok::At) {
                self.pos += 1;
                let (t, tpos) = self.eat_ident("'here', 'out' or 'in'")?;
                match t.as_str() {
                    "here" => Target::Here,
                    "out" => Target::Out,
                    "in" => Target::In,
                    other => {
                        self.error_at(tpos, format!("unknown product target '{other}'"));
                        return Err(Bail);
                    }
                }
            } else {
                Target::Here
            };
            products.push((mult, sp, target));
            if self.at(&Tok::Plus) {
                self.pos += 1;
            } else {
                break;
            }
        }

        let mut catalysts = Vec::new();
        if self.at_ident("catalyst") {
            self.bump();
            catalysts.push(self.multiset_item()?);
            while self.at(&Tok::Plus) {
                self.pos += 1;
                catalysts.push(self.multiset_item()?);
            }
        }

        let kinetics = if self.at_ident("kinetics") {
            self.bump();
            let (kind, kpos) = self.eat_ident("'mm' or 'mass_action'")?;
            match kind.as_str() {
                "mm" => {
                    self.eat_tok(Tok::LParen, "'('")?;
                    self.eat_keyword("kcat")?;
                    self.eat_tok(Tok::Eq, "'='")?;
                    let (kcat, _) = self.eat_number("kcat")?;
                    self.eat_tok(Tok::Comma, "','")?;
                    self.eat_keyword("km")?;
                    self.eat_tok(Tok::Eq, "'='")?;
                    let (km, _) = self.eat_number("km")?;
                    let upos = self.here();
                    let (u, _) = self.eat_ident("unit 'mM'")?;
                    if u != "mM" {
                        self.error_at(upos, format!("expected unit 'mM', found '{u}'"));
                        return Err(Bail);
                    }
                    self.eat_tok(Tok::Comma, "','")?;
                    self.eat_keyword("enzyme")?;
                    self.eat_tok(Tok::Eq, "'='")?;
                    let (enzyme, _) = self.eat_ident("enzyme species")?;
                    self.eat_tok(Tok::RParen, "')'")?;
                    RuleKineticsDecl::MichaelisMenten { kcat, km, enzyme }
                }
                "mass_action" => {
                    self.eat_tok(Tok::LParen, "'('")?;
                    self.eat_keyword("k")?;
                    self.eat_tok(Tok::Eq, "'='")?;
                    let (k, _) = self.eat_number("k")?;
                    self.eat_tok(Tok::RParen, "')'")?;
                    RuleKineticsDecl::MassAction { k }
                }
                other => {
                    self.error_at(kpos, format!("unknown kinetics '{other}'"));
                    return Err(Bail);
                }
            }
        } else if self.at_ident("priority") {
            self.bump();
            let (p, _) = self.eat_integer("priority")?;
            RuleKineticsDecl::Priority(p as i32)
        } else {
            RuleKineticsDecl::Default
        };

        self.eat_newline()?;
        ast.rules.push(RuleDecl { name, reactants, products, catalysts, kinetics, pos });
        Ok(())
    }

    fn parse_at(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("at")?;
        let (time, tpos) = self.eat_number("time")?;
        if time < 0.0 {
            self.error_at(tpos, "intervention times must be >= 0");
            return Err(Bail);
        }
        let upos = self.here();
        let (u, _) = self.eat_ident("unit 's'")?;
        if u != "s" {
            self.error_at(upos, format!("expected unit 's', found '{u}'"));
            return Err(Bail);
        }
        self.eat_keyword("do")?;
        let (op_word, op_pos) = self.eat_ident("intervention")?;
        let op = match op_word.as_str() {
            "dc_pulse" => {
                let mut targets = Vec::new();
                while let Some(Token { tok: Tok::Ident(_), .. }) = self.peek() {
                    targets.push(self.eat_ident("target")?.0);
                }
                if targets.is_empty() {
                    self.error_at(op_pos, "dc_pulse needs at least one target MVL");
                    return Err(Bail);
                }
                InterventionOp::DcPulse { targets }
            }
            "electroporate" => {
                let (target, _) = self.eat_ident("target MVL")?;
                let (duration, dpos) = self.eat_number("duration")?;
                if duration <= 0.0 {
                    self.error_at(dpos, "duration must be > 0");
                    return Err(Bail);
                }
                let upos = self.here();
                let (u, _) = self.eat_ident("unit 's'")?;
                if u != "s" {
                    self.error_at(upos, format!("expected unit 's', found '{u}'"));
                    return Err(Bail);
                }
                let (boost, bpos) = self.eat_number("boost")?;
                if boost < 1.0 {
                    self.error_at(bpos, "boost must be >= 1");
                    return Err(Bail);
                }
                InterventionOp::Electroporate { target, duration, boost }
            }
            "inject" => {
                let (compartment, _) = self.eat_ident("compartment")?;
                let (species, _) = self.eat_ident("species")?;
                let (amount, apos) = self.eat_number("amount")?;
                if amount < 0.0 {
                    self.error_at(apos, "amount must be >= 0");
                    return Err(Bail);
                }
                match ast.mode {
                    Mode::Kinetic => {
                        let upos = self.here();
                        let (u, _) = self.eat_ident("unit 'amol'")?;
                        if u != "amol" {
                            self.error_at(upos, format!("expected unit 'amol', found '{u}'"));
                            return Err(Bail);
                        }
                    }
                    Mode::Abstract => {
                        if amount.fract() != 0.0 {
                            self.error_at(apos, "abstract-mode amounts must be integers");
                            return Err(Bail);
                        }
                    }
                }
                InterventionOp::Inject { compartment, species, amount }
            }
            "insert_channel" => {
                let (compartment, _) = self.eat_ident("compartment")?;
                let (species, _) = self.eat_ident("species")?;
                let (permeability, ppos) = self.eat_number("permeability")?;
                if permeability < 0.0 {
                    self.error_at(ppos, "permeability must be >= 0");
                    return Err(Bail);
                }
                InterventionOp::InsertChannel { compartment, species, permeability }
            }
            other => {
                self.error_at(op_pos, format!("unknown intervention '{other}'"));
                return Err(Bail);
            }
        };
        self.eat_newline()?;
        ast.interventions.push(InterventionDecl { time, op, pos });
        Ok(())
    }

    fn parse_run(&mut self, ast: &mut ScenarioAst) -> Parsed<()> {
        let pos = self.eat_keyword("run")?;
        self.eat_tok(Tok::LBrace, "'{'")?;
        let mut run = RunDecl { pos, ..Default::default() };
        self.block_entries(|p| {
            let (key, kpos) = p.eat_ident("run field")?;
            p.eat_tok(Tok::Eq, "'='")?;
            match key.as_str() {
                "dt" => {
                    let (v, vpos) = p.eat_number("dt")?;
                    if v <= 0.0 {
                        p.error_at(vpos, "dt must be > 0");
                        return Err(Bail);
                    }
                    let upos = p.here();
                    let (u, _) = p.eat_ident("unit 's'")?;
                    if u != "s" {
                        p.error_at(upos, format!("expected unit 's', found '{u}'"));
                        return Err(Bail);
                    }
                    run.dt = Some(v);
                }
                "steps" => {
                    let (v, vpos) = p.eat_integer("steps")?;
                    if v < 0 {
                        p.error_at(vpos, "steps must be >= 0");
                        return Err(Bail);
                    }
                    run.steps = Some(v as usize);
                }
                "seed" => {
                    let (v, vpos) = p.eat_integer("seed")?;
                    if v < 0 {
                        p.error_at(vpos, "seed must be >= 0");
                        return Err(Bail);
                    }
                    run.seed = Some(v as u64);
                }
                "sample_every" => {
                    let (v, vpos) = p.eat_integer("sample_every")?;
                    if v < 1 {
                        p.error_at(vpos, "sample_every must be >= 1");
                        return Err(Bail);
                    }
                    run.sample_every = Some(v as usize);
                }
                "solver" => {
                    let (w, wpos) = p.eat_ident("'euler' or 'analytic'")?;
                    let Some(solver) = DiffusionSolver::parse(&w) else {
                        p.error_at(wpos, format!("unknown solver '{w}'"));
                        return Err(Bail);
                    };
                    run.solver = Some(solver);
                }
                "burst_ratio" => {
                    let (v, vpos) = p.eat_number("burst_ratio")?;
                    if v <= 1.0 {
                        p.error_at(vpos, "burst_ratio must be > 1");
                        return Err(Bail);
                    }
                    run.burst_ratio = Some(v);
                }
                "gas_factor" => {
                    let (v, vpos) = p.eat_number("gas_factor")?;
                    if v < 0.0 {
                        p.error_at(vpos, "gas_factor must be >= 0");
                        return Err(Bail);
                    }
                    run.gas_factor = Some(v);
                }
                other => {
                    p.error_at(kpos, format!("unknown run field '{other}'"));
                    return Err(Bail);
                }
            }
            Ok(())
        })?;
        self.eat_newline()?;
        ast.run = run;
        Ok(())
    }

    // ------------------------------------------------------------------

    fn check_semantics(&mut self, ast: &ScenarioAst) {
        use std::collections::BTreeSet;
        let mut declared: BTreeSet<&str> = BTreeSet::new();
        for sp in &ast.species {
            if !declared.insert(&sp.name) {
                self.error_at(sp.pos, format!("species '{}' declared twice", sp.name));
            }
        }
        let known = |name: &str| declared.contains(name);

        for atom in &ast.atoms {
            for (sp, _) in &atom.weights {
                if !known(sp) {
                    self.error_at(atom.pos, format!("atom tag references undeclared species '{sp}'"));
                }
            }
        }
        if let Some(env) = &ast.environment {
            for (sp, _) in &env.contents {
                if !known(sp) {
                    self.error_at(env.pos, format!("environment references undeclared species '{sp}'"));
                }
            }
        }
        if let Some(sw) = &ast.swelling {
            for (sp, _) in &sw.contents {
                if !known(sp) {
                    self.error_at(sw.pos, format!("swelling block references undeclared species '{sp}'"));
                }
            }
            if ast.mode == Mode::Abstract {
                self.error_at(sw.pos, "swelling solutions are a kinetic-mode construct");
            }
        }

        let mut compartment_names: BTreeSet<&str> = BTreeSet::new();
        fn walk_decls<'a>(
            decls: &'a [CompartmentDecl],
            parser: &mut Parser,
            known: &dyn Fn(&str) -> bool,
            names: &mut std::collections::BTreeSet<&'a str>,
        ) {
            for d in decls {
                if !names.insert(&d.name) {
                    parser.error_at(d.pos, format!("compartment '{}' declared twice", d.name));
                }
                for (sp, _) in &d.contents {
                    if !known(sp) {
                        parser.error_at(
                            d.pos,
                            format!("compartment '{}' references undeclared species '{sp}'", d.name),
                        );
                    }
                }
                walk_decls(&d.children, parser, known, names);
            }
        }
        walk_decls(&ast.compartments, self, &known, &mut compartment_names);

        match (&ast.generator, ast.compartments.is_empty()) {
            (Some(_), false) => {
                let pos = ast.generator.as_ref().unwrap().pos;
                self.error_at(pos, "a scenario takes either an explicit compartment tree or a generator block, not both");
            }
            (None, true) => {
                let pos = ast.run.pos;
                self.error_at(pos, "a scenario needs either an explicit compartment tree or a generator block");
            }
            _ => {}
        }

        for rule in &ast.rules {
            for (_, sp) in rule.reactants.iter().chain(&rule.catalysts) {
                if !known(sp) {
                    self.error_at(rule.pos, format!("rule '{}' references undeclared species '{sp}'", rule.name));
                }
            }
            for (_, sp, _) in &rule.products {
                if !known(sp) {
                    self.error_at(rule.pos, format!("rule '{}' references undeclared species '{sp}'", rule.name));
                }
            }
            match (&rule.kinetics, ast.mode) {
                (RuleKineticsDecl::Default | RuleKineticsDecl::Priority(_), Mode::Kinetic) => {
                    self.error_at(
                        rule.pos,
                        format!("rule '{}' needs a rate law (kinetics mm(...) or mass_action(...)) in kinetic mode", rule.name),
                    );
                }
                (RuleKineticsDecl::MassAction { .. } | RuleKineticsDecl::MichaelisMenten { .. }, Mode::Abstract) => {
                    self.error_at(
                        rule.pos,
                        format!("rule '{}' carries a rate law, which abstract mode cannot use", rule.name),
                    );
                }
                (RuleKineticsDecl::MichaelisMenten { enzyme, .. }, Mode::Kinetic) => {
                    if !known(enzyme) {
                        self.error_at(rule.pos, format!("rule '{}' references undeclared species '{enzyme}'", rule.name));
                    }
                    if rule.reactants.len() != 1 {
                        self.error_at(
                            rule.pos,
                            format!("rule '{}': Michaelis-Menten rules take exactly one substrate species", rule.name),
                        );
                    }
                }
                _ => {}
            }
        }

        let mut last_time = f64::NEG_INFINITY;
        for iv in &ast.interventions {
            if iv.time < last_time {
                self.error_at(iv.pos, "scheduled intervention times must be nondecreasing");
            }
            last_time = iv.time;
            let species_of = |op: &InterventionOp| match op {
                InterventionOp::Inject { species, .. }
                | InterventionOp::InsertChannel { species, .. } => Some(species.clone()),
                _ => None,
            };
            if let Some(sp) = species_of(&iv.op) {
                if !known(&sp) {
                    self.error_at(iv.pos, format!("intervention references undeclared species '{sp}'"));
                }
            }
        }

        if ast.mode == Mode::Kinetic {
            if let Some(env) = &ast.environment {
                if env.volume_fl.is_none() && !env.contents.is_empty() {
                    self.warn_at(
                        env.pos,
                        "environment concentrations without a volume use the default bath volume",
                    );
                }
            }
        }
    }
}
