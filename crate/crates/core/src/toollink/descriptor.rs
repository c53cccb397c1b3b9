//! Tool descriptors and the registry file format.
//!
//! ```toml
//! [[tool]]
//! name = "mock_docking"
//! description = "dock one ligand"
//! returns_files = true
//! args.smiles = { kind = "text", required = true }
//! outputs.score = { unit = "kcal/mol_docking", min = -12.0, max = -4.0 }
//! files = [{ name = "pose.pdbqt", category = "A" }]
//! ```

use super::artifact::Category;
use super::ToolLinkError;
use crate::skills::{classify_name, NameClass};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;

/// Unit tag that subjects a value to the docking sign rule.
pub const DOCKING_UNIT: &str = "kcal/mol_docking";
/// Unit tag for values that must lie in [0, 1].
pub const PROBABILITY_UNIT: &str = "probability";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgKind {
    Text,
    Number,
    Path,
    List,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub kind: ArgKind,
    #[serde(default)]
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default)]
    pub min: f64,
    #[serde(default = "one")]
    pub max: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSpec {
    pub name: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    #[serde(rename = "name")]
    pub tool_name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, rename = "args")]
    pub arg_schema: BTreeMap<String, ArgSpec>,
    #[serde(default)]
    pub returns_files: bool,
    #[serde(default)]
    pub outputs: BTreeMap<String, OutputSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<FileSpec>,
}

impl ToolDescriptor {
    pub fn new(name: &str) -> Self {
        ToolDescriptor {
            tool_name: name.to_string(),
            description: String::new(),
            arg_schema: BTreeMap::new(),
            returns_files: false,
            outputs: BTreeMap::new(),
            files: Vec::new(),
        }
    }

    pub fn arg(mut self, name: &str, kind: ArgKind, required: bool) -> Self {
        self.arg_schema
            .insert(name.to_string(), ArgSpec { kind, required });
        self
    }

    pub fn output(mut self, key: &str, unit: Option<&str>, min: f64, max: f64) -> Self {
        self.outputs.insert(
            key.to_string(),
            OutputSpec {
                unit: unit.map(String::from),
                min,
                max,
            },
        );
        self
    }

    pub fn file(mut self, name: &str, category: Category) -> Self {
        self.returns_files = true;
        self.files.push(FileSpec {
            name: name.to_string(),
            category,
        });
        self
    }

    /// Download category of a returned path, by file name; A when undeclared.
    pub fn category_of(&self, remote_path: &str) -> Category {
        let name = remote_path.rsplit('/').next().unwrap_or(remote_path);
        self.files
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.category)
            .unwrap_or(Category::A)
    }

    pub fn unit_of(&self, key: &str) -> Option<&str> {
        self.outputs.get(key).and_then(|o| o.unit.as_deref())
    }

    /// Checks presence and kind of every argument. Undeclared arguments
    /// are rejected.
    pub fn validate_args(&self, args: &Map<String, Value>) -> Result<(), String> {
        for (name, spec) in &self.arg_schema {
            match args.get(name) {
                None if spec.required => return Err(format!("missing required argument {name}")),
                None => {}
                Some(v) => {
                    let ok = match spec.kind {
                        ArgKind::Text => v.is_string(),
                        ArgKind::Number => v.is_number(),
                        ArgKind::Path => v.as_str().is_some_and(|s| !s.is_empty()),
                        ArgKind::List => v.is_array(),
                    };
                    if !ok {
                        return Err(
                            format!("argument {name} should be {:?}", spec.kind).to_lowercase()
                        );
                    }
                }
            }
        }
        if let Some(extra) = args.keys().find(|k| !self.arg_schema.contains_key(*k)) {
            return Err(format!("undeclared argument {extra}"));
        }
        Ok(())
    }
}

/// Registered tools keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    tools: BTreeMap<String, ToolDescriptor>,
}

#[derive(Deserialize)]
struct RegistryFile {
    #[serde(default)]
    tool: Vec<ToolDescriptor>,
}

impl Registry {
    pub fn new(tools: Vec<ToolDescriptor>) -> Result<Self, ToolLinkError> {
        let mut reg = Registry::default();
        for t in tools {
            reg.register(t)?;
        }
        Ok(reg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ToolLinkError> {
        let file: RegistryFile =
            toml::from_str(text).map_err(|e| ToolLinkError::Config(format!("registry: {e}")))?;
        Registry::new(file.tool)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            tool: Vec<&'a ToolDescriptor>,
        }
        toml::to_string(&Out {
            tool: self.tools.values().collect(),
        })
        .unwrap_or_default()
    }

    /// Adds or replaces a descriptor; the name must be a tool name.
    pub fn register(&mut self, tool: ToolDescriptor) -> Result<(), ToolLinkError> {
        if classify_name(&tool.tool_name) != NameClass::ToolName {
            return Err(ToolLinkError::NamingViolation(tool.tool_name));
        }
        self.tools.insert(tool.tool_name.clone(), tool);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ToolDescriptor> {
        self.tools.get(name)
    }

    /// Sorted by name.
    pub fn list(&self) -> Vec<ToolDescriptor> {
        self.tools.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tools.keys().map(String::as_str)
    }

    /// Closest registered name by edit distance, ties broken by name.
    pub fn nearest(&self, name: &str) -> Option<String> {
        let mut best: Option<(usize, &str)> = None;
        for candidate in self.tools.keys() {
            let d = strsim::levenshtein(name, candidate);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, candidate));
            }
        }
        best.map(|(_, n)| n.to_string())
    }

    /// Name, naming and schema checks for one call.
    pub fn check_call(
        &self,
        name: &str,
        args: &Map<String, Value>,
    ) -> Result<&ToolDescriptor, ToolLinkError> {
        match classify_name(name) {
            NameClass::SkillName => return Err(ToolLinkError::NamingViolation(name.to_string())),
            NameClass::Invalid if name.contains('-') => {
                return Err(ToolLinkError::NamingViolation(name.to_string()))
            }
            _ => {}
        }
        let desc = self.get(name).ok_or_else(|| ToolLinkError::UnknownTool {
            name: name.to_string(),
            nearest: self.nearest(name),
        })?;
        desc.validate_args(args)
            .map_err(ToolLinkError::SchemaViolation)?;
        Ok(desc)
    }
}
