//! Closed label space of source affiliations, roles and their product.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_ROLE_ALIASES: &str = include_str!("../data/role_aliases.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Institutional,
    Individual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Affiliation {
    Government,
    Corporate,
    Ngo,
    Academic,
    Group,
    Actor,
    Witness,
    Victim,
}

impl Affiliation {
    pub const ALL: [Affiliation; 8] = [
        Affiliation::Government,
        Affiliation::Corporate,
        Affiliation::Ngo,
        Affiliation::Academic,
        Affiliation::Group,
        Affiliation::Actor,
        Affiliation::Witness,
        Affiliation::Victim,
    ];

    pub fn category(self) -> Category {
        match self {
            Affiliation::Government
            | Affiliation::Corporate
            | Affiliation::Ngo
            | Affiliation::Academic
            | Affiliation::Group => Category::Institutional,
            Affiliation::Actor | Affiliation::Witness | Affiliation::Victim => Category::Individual,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Affiliation::Government => "government",
            Affiliation::Corporate => "corporate",
            Affiliation::Ngo => "ngo",
            Affiliation::Academic => "academic",
            Affiliation::Group => "group",
            Affiliation::Actor => "actor",
            Affiliation::Witness => "witness",
            Affiliation::Victim => "victim",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl fmt::Display for Affiliation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    DecisionMaker,
    Representative,
    Informational,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::DecisionMaker, Role::Representative, Role::Informational];

    pub fn name(self) -> &'static str {
        match self {
            Role::DecisionMaker => "decision-maker",
            Role::Representative => "representative",
            Role::Informational => "informational",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An (affiliation, role) cell together with its index in one [`LabelSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceType {
    pub affiliation: Affiliation,
    pub role: Role,
    pub index: usize,
}

impl SourceType {
    /// Canonical hyphenated label, e.g. `government-decision-maker`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.affiliation.name(), self.role.name())
    }
}

impl fmt::Display for SourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.affiliation, self.role)
    }
}

/// Maps informal role words ("spokesman", "expert") onto canonical roles.
///
/// Rows scoped to an affiliation take precedence over wildcard rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleAliases {
    scoped: HashMap<(Affiliation, String), Role>,
    global: HashMap<String, Role>,
}

impl RoleAliases {
    pub fn empty() -> Self {
        Self {
            scoped: HashMap::new(),
            global: HashMap::new(),
        }
    }

    /// Parses `<affiliation|*> <alias> <role>` rows; `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut aliases = Self::empty();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [scope, alias, role] = fields[..] else {
                return Err(bad(format!("expected 3 fields, found {}", fields.len())));
            };
            let role = Role::from_name(role).ok_or_else(|| bad(format!("unknown role `{role}`")))?;
            let alias = alias.to_lowercase();
            if scope == "*" {
                aliases.global.insert(alias, role);
            } else {
                let affiliation = Affiliation::from_name(scope)
                    .ok_or_else(|| bad(format!("unknown affiliation `{scope}`")))?;
                aliases.scoped.insert((affiliation, alias), role);
            }
        }
        Ok(aliases)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn resolve(&self, affiliation: Affiliation, word: &str) -> Option<Role> {
        Role::from_name(word)
            .or_else(|| self.scoped.get(&(affiliation, word.to_string())).copied())
            .or_else(|| self.global.get(word).copied())
    }
}

impl Default for RoleAliases {
    fn default() -> Self {
        Self::parse(DEFAULT_ROLE_ALIASES, "role_aliases.txt").expect("built-in alias table parses")
    }
}

/// Ordered, closed set of source-types. Member `i` always has `index == i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    members: Vec<SourceType>,
    aliases: RoleAliases,
}

/// The 8 x 3 affiliation-by-role grid, affiliation-major.
pub fn make_default_label_space() -> LabelSpace {
    let cells = Affiliation::ALL
        .into_iter()
        .flat_map(|a| Role::ALL.into_iter().map(move |r| (a, r)));
    LabelSpace::from_cells(cells, RoleAliases::default()).expect("default grid is unique")
}

impl Default for LabelSpace {
    fn default() -> Self {
        make_default_label_space()
    }
}

impl LabelSpace {
    pub fn from_cells(
        cells: impl IntoIterator<Item = (Affiliation, Role)>,
        aliases: RoleAliases,
    ) -> Result<Self> {
        let mut members: Vec<SourceType> = Vec::new();
        for (affiliation, role) in cells {
            if members.iter().any(|m| m.affiliation == affiliation && m.role == role) {
                return Err(Error::DuplicateLabel(format!("{affiliation}-{role}")));
            }
            let index = members.len();
            members.push(SourceType {
                affiliation,
                role,
                index,
            });
        }
        Ok(Self { members, aliases })
    }

    /// Builds a label space from label strings, normalizing role aliases.
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let aliases = RoleAliases::default();
        let cells = labels
            .into_iter()
            .map(|l| split_label(l, &aliases))
            .collect::<Result<Vec<_>>>()?;
        Self::from_cells(cells, aliases)
    }

    /// Reads a label file: one `affiliation-role` per line, `#` comments.
    pub fn parse_file_contents(text: &str, origin: &str) -> Result<Self> {
        let aliases = RoleAliases::default();
        let mut cells = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let cell = split_label(line, &aliases).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
            cells.push(cell);
        }
        Self::from_cells(cells, aliases)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_file_contents(&text, &path.display().to_string())
    }

    pub fn with_aliases(mut self, aliases: RoleAliases) -> Self {
        self.aliases = aliases;
        self
    }

    /// First `n` members, keeping their indices.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.members.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a {}-member label space to {n}",
                self.members.len()
            )));
        }
        Ok(Self {
            members: self.members[..n].to_vec(),
            aliases: self.aliases.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SourceType] {
        &self.members
    }

    pub fn get(&self, index: usize) -> Option<SourceType> {
        self.members.get(index).copied()
    }

    pub fn find(&self, affiliation: Affiliation, role: Role) -> Option<SourceType> {
        self.members
            .iter()
            .find(|m| m.affiliation == affiliation && m.role == role)
            .copied()
    }

    pub fn labels(&self) -> Vec<String> {
        self.members.iter().map(SourceType::label).collect()
    }

    /// Parses a hyphenated label such as `academic-expert`.
    pub fn parse(&self, text: &str) -> Result<SourceType> {
        let (affiliation, role) = split_label(text, &self.aliases)?;
        self.find(affiliation, role)
            .ok_or_else(|| Error::UnknownLabel(text.to_string()))
    }
}

/// Parses `text` against the default label space.
pub fn parse_source_type(text: &str) -> Result<SourceType> {
    thread_local! {
        static DEFAULT: LabelSpace = make_default_label_space();
    }
    DEFAULT.with(|space| space.parse(text))
}

fn split_label(text: &str, aliases: &RoleAliases) -> Result<(Affiliation, Role)> {
    let unknown = || Error::UnknownLabel(text.to_string());
    let normalized = text.trim().to_lowercase();
    let (head, rest) = normalized.split_once('-').ok_or_else(unknown)?;
    let affiliation = Affiliation::from_name(head).ok_or_else(unknown)?;
    let role = aliases.resolve(affiliation, rest).ok_or_else(unknown)?;
    Ok((affiliation, role))
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_space_is_the_full_grid() {
        let space = make_default_label_space();
        assert_eq!(space.len(), 24);
        let first = space.members()[0];
        assert_eq!((first.affiliation, first.role), (Affiliation::Government, Role::DecisionMaker));
        for (i, m) in space.members().iter().enumerate() {
            assert_eq!(m.index, i);
        }
        for a in Affiliation::ALL {
            for r in Role::ALL {
                let hits = space
                    .members()
                    .iter()
                    .filter(|m| m.affiliation == a && m.role == r)
                    .count();
                assert_eq!(hits, 1, "{a}-{r}");
            }
        }
    }

    #[test]
    fn categories_follow_table_grouping() {
        use Affiliation::*;
        for a in [Government, Corporate, Ngo, Academic, Group] {
            assert_eq!(a.category(), Category::Institutional);
        }
        for a in [Actor, Witness, Victim] {
            assert_eq!(a.category(), Category::Individual);
        }
    }

    #[test]
    fn parses_canonical_and_alias_labels() {
        let gdm = parse_source_type("government-decision-maker").unwrap();
        assert_eq!((gdm.affiliation, gdm.role), (Affiliation::Government, Role::DecisionMaker));
        assert_eq!(gdm.index, 0);

        let expert = parse_source_type("academic-expert").unwrap();
        assert_eq!((expert.affiliation, expert.role), (Affiliation::Academic, Role::Informational));
        assert_eq!(expert.label(), "academic-informational");

        let spokes = parse_source_type("corporate-spokesman").unwrap();
        assert_eq!(spokes.role, Role::Representative);
        let indiv = parse_source_type("victim-individual").unwrap();
        assert_eq!(indiv.role, Role::DecisionMaker);
        assert!(parse_source_type("government-individual").is_err());
    }

    #[test]
    fn unknown_label_names_the_string() {
        let err = parse_source_type("unicorn-wrangler").unwrap_err();
        assert!(matches!(&err, Error::UnknownLabel(s) if s == "unicorn-wrangler"));
        assert!(err.to_string().contains("unicorn-wrangler"));
        assert!(parse_source_type("government").is_err());
    }

    #[test]
    fn label_file_with_comments() {
        let text = "# subset\ngovernment-decision-maker\n\nacademic-expert # alias\n";
        let space = LabelSpace::parse_file_contents(text, "labels.txt").unwrap();
        assert_eq!(space.labels(), ["government-decision-maker", "academic-informational"]);
        assert!(space.parse("corporate-decision-maker").is_err());

        let dup = LabelSpace::parse_file_contents("ngo-expert\nngo-informational\n", "x");
        assert!(matches!(dup, Err(Error::DuplicateLabel(_))));
        let bad = LabelSpace::parse_file_contents("ngo-expert\nfoo-bar\n", "x").unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn truncation_keeps_indices() {
        let space = make_default_label_space().truncated(8).unwrap();
        assert_eq!(space.len(), 8);
        assert_eq!(space.members()[7].label(), "ngo-representative");
        assert!(space.parse("academic-expert").is_err());
    }

    #[test]
    fn round_trip_every_member() {
        let space = make_default_label_space();
        for m in space.members() {
            let parsed = space.parse(&m.label()).unwrap();
            assert_eq!(&parsed, m);
            assert_eq!(parsed.label(), m.label());
        }
    }
}
