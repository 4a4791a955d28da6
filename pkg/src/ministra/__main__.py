from .app import main


def cli() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    cli()
