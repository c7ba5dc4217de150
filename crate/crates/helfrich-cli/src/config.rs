//! Flat `key = value` run configuration: UTF-8 text, `#` comments, unknown
//! and duplicate keys rejected, paths resolved relative to the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(format!(
                    "{}:{}: duplicate key `{key}`",
                    path.display(),
                    lineno + 1
                ));
            }
        }
        Ok(Self {
            values,
            consumed: Default::default(),
            base_dir,
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key).map(String::as_str);
        if v.is_some() {
            self.consumed.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn require_string(&self, key: &str) -> Result<String, String> {
        self.string(key)
            .ok_or_else(|| format!("missing required key `{key}`"))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                self.base_dir.join(p)
            }
        })
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, String> {
        self.path(key)
            .ok_or_else(|| format!("missing required key `{key}`"))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.raw(key)
            .map(|v| v.parse().map_err(|e| format!("key `{key}`: {e}")))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, String> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, String> {
        self.raw(key)
            .map(|v| v.parse().map_err(|e| format!("key `{key}`: {e}")))
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, String> {
        self.raw(key)
            .map(|v| v.parse().map_err(|e| format!("key `{key}`: {e}")))
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, String> {
        match self.raw(key) {
            None => Ok(default),
            Some("on") | Some("true") | Some("1") => Ok(true),
            Some("off") | Some("false") | Some("0") => Ok(false),
            Some(other) => Err(format!("key `{key}`: expected on/off, got `{other}`")),
        }
    }

    /// Comma-separated floats, e.g. `0.5, 1, 2`.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse().map_err(|e| format!("key `{key}`: {e}")))
                    .collect()
            })
            .transpose()
    }

    /// Semicolon-separated 3D points, e.g. `0,0,0; 1,2,3`.
    pub fn point_list(&self, key: &str) -> Result<Option<Vec<[f64; 3]>>, String> {
        self.raw(key)
            .map(|v| {
                v.split(';')
                    .map(|p| {
                        let coords: Result<Vec<f64>, String> = p
                            .split(',')
                            .map(|s| s.trim().parse().map_err(|e| format!("key `{key}`: {e}")))
                            .collect();
                        let coords = coords?;
                        if coords.len() != 3 {
                            return Err(format!("key `{key}`: point `{p}` is not 3D"));
                        }
                        Ok([coords[0], coords[1], coords[2]])
                    })
                    .collect()
            })
            .transpose()
    }

    /// Legendre mode list, e.g. `2:1.0, 4:0.3`.
    pub fn mode_list(&self, key: &str) -> Result<Option<Vec<(usize, f64)>>, String> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|m| {
                        let (deg, amp) = m
                            .split_once(':')
                            .ok_or_else(|| format!("key `{key}`: expected deg:amp, got `{m}`"))?;
                        Ok((
                            deg.trim()
                                .parse()
                                .map_err(|e| format!("key `{key}`: {e}"))?,
                            amp.trim()
                                .parse()
                                .map_err(|e| format!("key `{key}`: {e}"))?,
                        ))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Fail on any key that was never consumed by the command.
    pub fn finish(&self) -> Result<(), String> {
        let consumed = self.consumed.borrow();
        let unknown: Vec<&String> = self
            .values
            .keys()
            .filter(|k| !consumed.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(format!(
                "unknown key(s): {}",
                unknown
                    .iter()
                    .map(|s| format!("`{s}`"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        }
    }

    /// Echo of the effective configuration for reproducibility.
    pub fn resolved_echo(&self, effective: &BTreeMap<String, String>) -> String {
        let mut out = String::new();
        for (k, v) in effective {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn given(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}
