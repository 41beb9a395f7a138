// Pure HTML renderers. Highlight offsets from the API are applied to the
// passage text exactly as given; nothing is recomputed client-side.

import type { AnswerSpan, DocResult, FaqAnswer, SearchResult } from "./types"
import type { UiSearchState } from "./state"

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;")
}

export interface HighlightSegments {
  before: string
  mark: string
  after: string
}

/** Slice the passage text at the server-provided offsets. The marked
 * segment is the untouched substring [char_start, char_end). */
export function highlightSegments(text: string, charStart: number,
                                  charEnd: number): HighlightSegments {
  return {
    before: text.slice(0, charStart),
    mark: text.slice(charStart, charEnd),
    after: text.slice(charEnd),
  }
}

export function renderHighlighted(text: string, span: AnswerSpan): string {
  const seg = highlightSegments(text, span.char_start, span.char_end)
  return `${escapeHtml(seg.before)}<mark class="answer-highlight">${
    escapeHtml(seg.mark)}</mark>${escapeHtml(seg.after)}`
}

function renderTopicChips(topics: string[]): string {
  if (!topics.length) return ""
  const chips = topics.map(t =>
    `<span class="topic-chip">${escapeHtml(t)}</span>`).join("")
  return `<div class="topic-chips">${chips}</div>`
}

function renderFeedbackButtons(docId: string, state: UiSearchState): string {
  const fb = state.feedback[docId]
  const disabled = state.queryId === null ? " disabled" : ""
  const upActive = fb?.rating === "up" ? " active" : ""
  const downActive = fb?.rating === "down" ? " active" : ""
  const pending = fb?.pending ? `<span class="feedback-pending">retrying…</span>` : ""
  return `<div class="feedback">` +
    `<button class="rate-up${upActive}" data-doc="${escapeHtml(docId)}"` +
    ` data-rating="up"${disabled}>👍</button>` +
    `<button class="rate-down${downActive}" data-doc="${escapeHtml(docId)}"` +
    ` data-rating="down"${disabled}>👎</button>${pending}</div>`
}

export function renderResultCard(doc: DocResult, answer: AnswerSpan | null,
                                 passageText: string | null,
                                 state: UiSearchState): string {
  const body = answer !== null && passageText !== null
    ? `<p class="passage">${renderHighlighted(passageText, answer)}</p>`
    : `<p class="snippet">${escapeHtml(doc.snippet)}</p>`
  return `<article class="result-card" data-doc="${escapeHtml(doc.doc_id)}">` +
    `<h3 class="title">${escapeHtml(doc.title)}</h3>` +
    body + renderTopicChips(doc.topics) +
    renderFeedbackButtons(doc.doc_id, state) +
    `</article>`
}

function renderFaq(faq: FaqAnswer | null): string {
  if (faq === null) return ""
  return `<aside class="faq-answer"><h4>${escapeHtml(faq.question)}</h4>` +
    `<p>${escapeHtml(faq.answer)}</p></aside>`
}

/** Pair each document with its first highlighted answer, if any. At most
 * three cards carry a highlight (the API already caps answers at three). */
export function cardsWithHighlights(result: SearchResult):
    Array<{ doc: DocResult; answer: AnswerSpan | null; passageText: string | null }> {
  const byDoc = new Map<string, AnswerSpan>()
  for (const answer of result.answers.slice(0, 3)) {
    if (!byDoc.has(answer.doc_id)) byDoc.set(answer.doc_id, answer)
  }
  return result.docs.map(doc => {
    const answer = byDoc.get(doc.doc_id) ?? null
    let passageText: string | null = null
    if (answer) {
      const passage = result.passages.find(
        p => p.doc_id === answer.doc_id && p.passage_index === answer.passage_index)
      passageText = passage ? passage.text : null
    }
    return { doc, answer: passageText === null ? null : answer, passageText }
  })
}

export function renderResults(state: UiSearchState): string {
  if (state.error !== null) {
    return `<div class="error-banner">${escapeHtml(state.error)} ` +
      `<button class="retry">Retry</button></div>`
  }
  if (state.loading) return `<div class="loading">Searching…</div>`
  if (state.result === null) return `<div class="idle">Enter a query.</div>`
  if (!state.result.docs.length) return `<div class="empty">No results.</div>`
  const cards = cardsWithHighlights(state.result)
    .map(({ doc, answer, passageText }) =>
      renderResultCard(doc, answer, passageText, state))
    .join("")
  return renderFaq(state.result.faq_answer) +
    `<div class="results">${cards}</div>`
}

export function renderTopicFacets(state: UiSearchState): string {
  const boxes = state.availableTopics.map(name => {
    const checked = state.selectedTopics.includes(name) ? " checked" : ""
    return `<label class="facet"><input type="checkbox" data-topic="${
      escapeHtml(name)}"${checked}> ${escapeHtml(name)}</label>`
  }).join("")
  return `<fieldset class="topic-facets"><legend>Topics</legend>${boxes}</fieldset>`
}

export function renderSearchBar(state: UiSearchState): string {
  const modes: Array<[string, string]> = [
    ["auto", "Auto"], ["keyword", "Keyword"], ["natural_language", "Question"]]
  const options = modes.map(([value, label]) =>
    `<option value="${value}"${state.mode === value ? " selected" : ""}>${
      label}</option>`).join("")
  return `<form class="search-bar">` +
    `<input type="search" name="q" value="${escapeHtml(state.queryText)}"` +
    ` placeholder="Search the literature…">` +
    `<select name="mode">${options}</select>` +
    `<button type="submit">Search</button></form>`
}

export function renderArticleDetail(state: UiSearchState): string {
  if (state.detail === null) return ""
  const { article, similar, citations } = state.detail
  const authors = article.authors.length
    ? `<p class="authors">${escapeHtml(article.authors.join(", "))}</p>` : ""
  const recs = similar.length
    ? `<ul class="similar">${similar.map(s =>
        `<li data-doc="${escapeHtml(s.doc_id)}">${escapeHtml(s.title || s.doc_id)}` +
        ` <span class="sim">(${s.similarity.toFixed(3)})</span></li>`).join("")}</ul>`
    : `<p class="no-similar">No recommendations available.</p>`
  const cite = (ids: string[]) => ids.length
    ? ids.map(id => `<span class="cite" data-doc="${escapeHtml(id)}">${
        escapeHtml(id)}</span>`).join(", ")
    : "none"
  return `<section class="article-detail" data-doc="${escapeHtml(article.doc_id)}">` +
    `<button class="close-detail">×</button>` +
    `<h2>${escapeHtml(article.title)}</h2>` + authors +
    renderTopicChips(article.topics) +
    `<p class="abstract">${escapeHtml(article.abstract)}</p>` +
    `<h4>Similar articles</h4>${recs}` +
    `<h4>Citations</h4><p>cites: ${cite(citations.cites)}</p>` +
    `<p>cited by: ${cite(citations.cited_by)}</p>` +
    `</section>`
}

export function renderPage(state: UiSearchState): string {
  return renderSearchBar(state) + renderTopicFacets(state) +
    renderArticleDetail(state) + renderResults(state)
}
