//! Package pages rendered from README.md and the manifest.

use bbohub_registry::PackageManifest;
use pulldown_cmark::{CodeBlockKind, Event, HeadingLevel, Options, Parser, Tag, TagEnd};
use serde::{Deserialize, Serialize};

use crate::CatalogError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageDoc {
    #[serde(rename = "ref")]
    pub package: String,
    pub category: String,
    pub name: String,
    pub version: String,
    pub title: String,
    pub summary: String,
    pub authors: Vec<String>,
    pub license: String,
    /// Normalized, in manifest order, without duplicates.
    pub tags: Vec<String>,
    pub body_text: String,
    pub body_html: String,
    /// Image path as written in the README, relative to the package.
    pub thumbnail: Option<String>,
    pub example_snippet: Option<String>,
}

fn options() -> Options {
    Options::ENABLE_TABLES | Options::ENABLE_STRIKETHROUGH
}

#[derive(Default)]
struct Extract {
    title: Option<String>,
    thumbnail: Option<String>,
    snippet: Option<String>,
    text: String,
}

fn extract(readme: &str) -> Extract {
    let mut ex = Extract::default();
    let mut heading: Option<String> = None;
    let mut block: Option<String> = None;
    for event in Parser::new_ext(readme, options()) {
        let block_end = matches!(
            event,
            Event::End(
                TagEnd::Paragraph
                    | TagEnd::Heading(_)
                    | TagEnd::Item
                    | TagEnd::CodeBlock
                    | TagEnd::BlockQuote(_)
                    | TagEnd::TableRow
                    | TagEnd::TableHead
            )
        );
        match event {
            Event::Start(Tag::Heading {
                level: HeadingLevel::H1,
                ..
            }) if ex.title.is_none() => heading = Some(String::new()),
            Event::End(TagEnd::Heading(HeadingLevel::H1)) => {
                if let Some(h) = heading.take() {
                    let h = h.trim().to_owned();
                    if !h.is_empty() {
                        ex.title = Some(h);
                    }
                }
            }
            Event::Start(Tag::CodeBlock(CodeBlockKind::Fenced(_))) if ex.snippet.is_none() => {
                block = Some(String::new())
            }
            Event::End(TagEnd::CodeBlock) => {
                if let Some(b) = block.take() {
                    ex.snippet = Some(b);
                }
            }
            Event::Start(Tag::Image { dest_url, .. }) if ex.thumbnail.is_none() => {
                ex.thumbnail = Some(dest_url.into_string())
            }
            Event::Text(t) | Event::Code(t) => {
                if let Some(h) = heading.as_mut() {
                    h.push_str(&t);
                }
                if let Some(b) = block.as_mut() {
                    b.push_str(&t);
                }
                ex.text.push_str(&t);
            }
            Event::SoftBreak | Event::HardBreak => {
                if let Some(h) = heading.as_mut() {
                    h.push(' ');
                }
                ex.text.push('\n');
            }
            Event::End(TagEnd::TableCell) => ex.text.push(' '),
            _ => {}
        }
        if block_end && !ex.text.ends_with('\n') {
            ex.text.push('\n');
        }
    }
    ex
}

pub fn render_html(readme: &str) -> String {
    let mut html = String::new();
    pulldown_cmark::html::push_html(&mut html, Parser::new_ext(readme, options()));
    ammonia::clean(&html)
}

/// Builds the page for one package. The README must not be blank.
pub fn build_page(readme: &str, manifest: &PackageManifest) -> Result<PageDoc, CatalogError> {
    let package = format!("{}/{}", manifest.category, manifest.name);
    if readme.trim().is_empty() {
        return Err(CatalogError::EmptyReadme { package });
    }
    let ex = extract(readme);
    Ok(PageDoc {
        package,
        category: manifest.category.to_string(),
        name: manifest.name.clone(),
        version: manifest.version.clone(),
        title: ex.title.unwrap_or_else(|| manifest.name.clone()),
        summary: manifest.summary.clone(),
        authors: manifest.authors.clone(),
        license: manifest.license.clone(),
        tags: manifest.normalized_tags(),
        body_text: ex.text.trim().to_owned(),
        body_html: render_html(readme),
        thumbnail: ex.thumbnail,
        example_snippet: ex.snippet,
    })
}
