// Thin fetch client for the published search endpoints. Every network
// interaction of the UI goes through this module.

import type {
  ArticleDetail,
  Citations,
  FeedbackBody,
  SearchMode,
  SearchResponse,
  SimilarEntry,
} from "./types"

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message)
    this.name = "ApiError"
  }
}

async function expectJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText
    try {
      const body = (await resp.json()) as { detail?: string }
      if (body.detail) detail = body.detail
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail)
  }
  return (await resp.json()) as T
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string, params?: Record<string, string | number | undefined>): string {
    const query = new URLSearchParams()
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined && value !== "") query.append(key, String(value))
    }
    const qs = query.toString()
    return `${this.baseUrl}${path}${qs ? `?${qs}` : ""}`
  }

  async search(q: string, topics: string[], mode: SearchMode | undefined,
               k: number): Promise<SearchResponse> {
    const resp = await fetch(this.url("/search", {
      q,
      topics: topics.length ? topics.join(",") : undefined,
      mode,
      k,
    }))
    return expectJson<SearchResponse>(resp)
  }

  async topics(): Promise<string[]> {
    const resp = await fetch(this.url("/topics"))
    const body = await expectJson<{ topics: string[] }>(resp)
    return body.topics
  }

  async article(docId: string): Promise<ArticleDetail> {
    const resp = await fetch(this.url(`/articles/${encodeURIComponent(docId)}`))
    return expectJson<ArticleDetail>(resp)
  }

  async similar(docId: string, k = 5, alpha?: number): Promise<SimilarEntry[]> {
    const resp = await fetch(this.url(
      `/articles/${encodeURIComponent(docId)}/similar`, { k, alpha }))
    const body = await expectJson<{ similar: SimilarEntry[] }>(resp)
    return body.similar
  }

  async citations(docId: string): Promise<Citations> {
    const resp = await fetch(this.url(`/articles/${encodeURIComponent(docId)}/citations`))
    return expectJson<Citations>(resp)
  }

  async feedback(body: FeedbackBody): Promise<void> {
    const resp = await fetch(this.url("/feedback"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    })
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText)
  }
}
