from pydantic import BaseModel


class VeilBaseModel(BaseModel):
    """
    Base of every config, manifest, record and report model. JSON lines drop
    None fields, so metrics a stage never produced stay out of the logs.
    """

    def json(self, **kwargs) -> str:
        kwargs.setdefault("exclude_none", True)
        return self.model_dump_json(**kwargs)
