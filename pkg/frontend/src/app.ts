// DOM glue: mount the controller onto a root element and wire events.

import { ApiClient } from "./api"
import { renderPage } from "./render"
import { SearchController } from "./state"

export function mountApp(root: HTMLElement, baseUrl = ""): SearchController {
  const controller = new SearchController(new ApiClient(baseUrl))

  const redraw = () => {
    root.innerHTML = renderPage(controller.state)
  }
  controller.onChange(redraw)

  root.addEventListener("submit", event => {
    const form = event.target as HTMLElement
    if (!form.classList.contains("search-bar")) return
    event.preventDefault()
    const input = form.querySelector("input[name=q]") as HTMLInputElement
    const mode = form.querySelector("select[name=mode]") as HTMLSelectElement
    controller.setQuery(input.value)
    controller.setMode(mode.value as "auto" | "keyword" | "natural_language")
    void controller.runSearch()
  })

  root.addEventListener("change", event => {
    const box = event.target as HTMLInputElement
    const topic = box.dataset?.topic
    if (topic) void controller.toggleTopic(topic)
  })

  root.addEventListener("click", event => {
    const el = event.target as HTMLElement
    if (el.classList.contains("retry")) {
      void controller.runSearch()
      void controller.flushQueue()
      return
    }
    if (el.classList.contains("close-detail")) {
      controller.closeDetail()
      return
    }
    const rating = el.dataset?.rating as "up" | "down" | undefined
    if (rating && el.dataset.doc) {
      event.stopPropagation()
      void controller.rate(el.dataset.doc, rating)
      return
    }
    if ((el.classList.contains("cite") || el.closest?.(".similar li")) &&
        el.dataset.doc) {
      void controller.openArticle(el.dataset.doc)
      return
    }
    const card = el.closest?.(".result-card") as HTMLElement | null
    if (card?.dataset.doc) {
      void controller.clickResult(card.dataset.doc)
      void controller.openArticle(card.dataset.doc)
    }
  })

  void controller.init().then(redraw)
  redraw()
  return controller
}
